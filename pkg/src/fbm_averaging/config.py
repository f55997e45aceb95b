"""Experiment configuration: nested dataclasses read from and written to JSON."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .noise import CovarianceSpectrum, HurstPair
from .solver import SolverConfig, SystemSpec, _replace, benchmark_spec, zero_spec
from .spectral import DiagonalOperator


class ConfigError(ValueError):
    pass


@dataclass
class SystemConfig:
    model: str = "benchmark"              # benchmark | zero
    eps: float = 0.1
    H1: float = 0.75
    H2: float = 0.5
    lambda_A: list | None = None          # None keeps the model defaults
    lambda_B: list | None = None
    q1: list | None = None
    q2: list | None = None
    C1: float | None = None
    f_bounded: bool = True


@dataclass
class NoiseConfig:
    paper_covariance: bool = False
    h2: float = 0.0025
    fbm_H: float | None = None            # None samples with system.H1
    fbm_n: int = 4096
    fbm_T: float = 1.0
    fbm_modes: int = 4


@dataclass
class ExperimentParams:
    eps_list: list = field(default_factory=lambda: [0.2, 0.1, 0.05, 0.02])
    seeds: int = 20
    T: float = 1.0
    gamma: float = 0.55
    delta: float = 0.1
    T_erg: float = 100.0
    M: int = 500
    fbar_spacing: float = 0.05
    fbar_chains: int = 32
    fbar_T_erg: float = 50.0
    fbar_h: float = 0.02
    solver_tol: float = 5e-4
    n_points: int = 5
    window: list = field(default_factory=lambda: [0.0, 1.0])
    integrand: str = "identity"           # identity | random


@dataclass
class OutputConfig:
    directory: str = "out"


@dataclass
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    experiment: ExperimentParams = field(default_factory=ExperimentParams)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def build_system(self) -> SystemSpec:
        return build_system(self.system)


_SECTIONS = {"system": SystemConfig, "solver": SolverConfig, "noise": NoiseConfig,
             "experiment": ExperimentParams, "output": OutputConfig}


def _section(cls, data: dict, name: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object")
    known = {f.name for f in dataclasses.fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"{name}: unknown field(s) {sorted(extra)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def from_dict(data: dict) -> ExperimentConfig:
    extra = set(data) - set(_SECTIONS) - {"seed"}
    if extra:
        raise ConfigError(f"unknown top-level field(s) {sorted(extra)}")
    kw = {k: _section(cls, data.get(k, {}), k) for k, cls in _SECTIONS.items()}
    cfg = ExperimentConfig(**kw, seed=int(data.get("seed", 0)))
    validate(cfg)
    return cfg


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return from_dict(data)


def dumps(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


def build_system(sc: SystemConfig) -> SystemSpec:
    """Instantiate the model and apply numeric overrides; hypothesis violations raise ``ConfigError``."""
    try:
        HurstPair(sc.H1, sc.H2)
    except ValueError as exc:
        raise ConfigError(f"system.H1/H2: {exc}") from exc
    if not sc.f_bounded:
        raise ConfigError("system.f_bounded: the slow drift must be declared bounded")
    if sc.model == "benchmark":
        spec = benchmark_spec(sc.eps, sc.H1, sc.H2)
    elif sc.model == "zero":
        spec = _replace(zero_spec(4, sc.eps), hurst=HurstPair(sc.H1, sc.H2))
    else:
        raise ConfigError(f"system.model: unknown model {sc.model!r}")
    kw = {}
    try:
        if sc.lambda_A is not None:
            kw["A"] = DiagonalOperator(sc.lambda_A)
        if sc.lambda_B is not None:
            kw["B"] = DiagonalOperator(sc.lambda_B)
        if sc.q1 is not None:
            kw["Q1"] = CovarianceSpectrum(np.asarray(sc.q1, dtype=float))
        if sc.q2 is not None:
            kw["Q2"] = CovarianceSpectrum(np.asarray(sc.q2, dtype=float))
        if sc.C1 is not None:
            kw["C1"] = float(sc.C1)
        return _replace(spec, **kw) if kw else spec
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from exc


def validate(cfg: ExperimentConfig):
    build_system(cfg.system)
    e = cfg.experiment
    if not e.eps_list or any(not 0 < x <= 1 for x in e.eps_list):
        raise ConfigError("experiment.eps_list: values must lie in (0, 1]")
    if e.seeds < 1 or e.M < 2:
        raise ConfigError("experiment.seeds must be >= 1 and experiment.M >= 2")
    if not 0 < e.delta < 1:
        raise ConfigError("experiment.delta must lie in (0, 1)")
    if cfg.noise.fbm_H is not None and not 0.0 < cfg.noise.fbm_H < 1.0:
        raise ConfigError("noise.fbm_H must lie in (0, 1)")
    if e.integrand not in ("identity", "random"):
        raise ConfigError("experiment.integrand must be 'identity' or 'random'")
    if cfg.noise.fbm_n < 2:
        raise ConfigError("noise.fbm_n must be at least 2")
