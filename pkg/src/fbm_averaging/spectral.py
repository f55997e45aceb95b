"""Finite spectral truncation: diagonal operators, semigroups and Hölder norms.

State vectors are plain ``numpy`` arrays holding coefficients in the
eigenbasis of the operator, shape ``(N,)`` (or ``(..., N)`` for batches).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_N = 16


@dataclass(frozen=True)
class DiagonalOperator:
    """Positive spectrum ``lambda_1 <= ... <= lambda_N`` of ``-A`` (or ``-B``)."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        if lam.size == 0:
            raise ValueError("operator needs at least one eigenvalue")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("eigenvalues must be finite and strictly positive")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be nondecreasing")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    def scaled(self, factor: float) -> "DiagonalOperator":
        return DiagonalOperator(self.eigenvalues * factor)


@dataclass(frozen=True)
class GridFunction:
    """Values of a V-valued function on a strictly increasing time grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != grid.size:
            raise ValueError("values length must equal grid length")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.grid.size

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def restrict(self, t0: float, t1: float) -> "GridFunction":
        mask = (self.grid >= t0 - 1e-12) & (self.grid <= t1 + 1e-12)
        return GridFunction(self.grid[mask], self.values[mask])


@dataclass(frozen=True)
class HolderParams:
    """Parameters of the weighted norm ``||.||_{gamma, rho, ~}``.

    ``weight_exponent`` is the power of ``(s - T1)`` used when
    ``tilde_weight`` is on; it defaults to ``gamma``.
    """

    gamma: float
    rho: float = 0.0
    tilde_weight: bool = False
    weight_exponent: float | None = field(default=None)

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")


def semigroup_apply(op: DiagonalOperator, t: float, v) -> np.ndarray:
    """``S(t) v`` with ``S(t) = exp(-t * diag(lambda))``."""
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    return np.exp(-op.eigenvalues * t) * np.asarray(v, dtype=float)


def fractional_power_apply(op: DiagonalOperator, sigma: float, v) -> np.ndarray:
    return op.eigenvalues ** sigma * np.asarray(v, dtype=float)


def _pair_sup(grid, values, gamma, weight=None):
    # max over pairs s < t of weight(s, t) * |f(t) - f(s)| / (t - s)^gamma, walked by lag
    n = grid.size
    best = 0.0
    for lag in range(1, n):
        diff = np.linalg.norm(values[lag:] - values[:-lag], axis=1)
        dt = grid[lag:] - grid[:-lag]
        q = diff / dt ** gamma
        if weight is not None:
            q = q * weight(grid[:-lag], grid[lag:])
        m = float(q.max())
        if m > best:
            best = m
    return best


def holder_seminorm(f: GridFunction, gamma: float) -> float:
    """Grid-pair proxy of ``sup_{s<t} |f(t) - f(s)| / (t - s)^gamma``."""
    if len(f) < 2:
        raise ValueError("Hölder seminorm needs at least two grid points")
    return _pair_sup(f.grid, f.values, gamma)


def weighted_holder_norm(f: GridFunction, p: HolderParams) -> float:
    if len(f) < 2:
        raise ValueError("weighted Hölder norm needs at least two grid points")
    t1 = f.grid[0]
    norms = np.linalg.norm(f.values, axis=1)
    sup_part = float(np.max(np.exp(-p.rho * (f.grid - t1)) * norms))
    kappa = p.gamma if p.weight_exponent is None else p.weight_exponent

    def weight(s, t):
        w = np.exp(-p.rho * (t - t1))
        if p.tilde_weight:
            w = w * (s - t1) ** kappa
        return w

    return sup_part + _pair_sup(f.grid, f.values, p.gamma, weight)


def _sample_times(t_grid):
    t_grid = np.asarray(t_grid, dtype=float)
    step = float(np.min(np.diff(t_grid)))
    keep = t_grid[t_grid >= 10 * step]
    return keep, step


def _semigroup_constants(lam, sigma, ts, n_sub=24):
    lam = np.asarray(lam)[:, None]
    out = {}
    # semi1: ||S(t)||_{V -> V_sigma} <= c t^-sigma exp(-lambda_1 t)
    op_norm = np.max(lam ** sigma * np.exp(-lam * ts), axis=0)
    out["semi1"] = float(np.max(op_norm * ts ** sigma * np.exp(lam[0] * ts)))
    # semi2: ||S(t) - id||_{V_sigma -> V} <= c t^sigma
    op_norm = np.max(np.abs(1 - np.exp(-lam * ts)) / lam ** sigma, axis=0)
    out["semi2"] = float(np.max(op_norm / ts ** sigma))
    # semi3 over (a = t - r, b = r - q); semi4 over (a = s - r, b = r - q, c = t - s), rho = nu = sigma
    sub = ts[np.linspace(0, ts.size - 1, min(n_sub, ts.size)).astype(int)]
    a, b = np.meshgrid(sub, sub, indexing="ij")
    lam3 = lam[:, :, None]
    v3 = np.max(np.exp(-lam3 * a) * (1 - np.exp(-lam3 * b)), axis=0)
    out["semi3"] = float(np.max(v3 / (b ** sigma * a ** -sigma)))
    a, b, c = np.meshgrid(sub, sub, sub, indexing="ij")
    lam4 = lam[:, :, None, None]
    v4 = np.max(np.exp(-lam4 * a) * (1 - np.exp(-lam4 * c)) * (1 - np.exp(-lam4 * b)), axis=0)
    out["semi4"] = float(np.max(v4 / (c ** sigma * b ** sigma * a ** (-2 * sigma))))
    return out


def semigroup_bound_check(op: DiagonalOperator, sigma: float, t_grid=None, T: float = 1.0,
                          refinements=(256, 512, 1024), rel_tol: float = 0.1) -> dict:
    """Fit the smallest constants in the analytic-semigroup estimates.

    Each constant is the maximum of the bound ratio over sample times
    ``t >= 10 * step`` (the smallest constant that makes the bound hold on
    the samples).  With ``t_grid=None`` the fit is repeated on dyadic grids
    of ``[0, T]`` and a constant is flagged when the last two refinements
    differ by more than ``rel_tol``.
    """
    if not 0.0 <= sigma <= 1.0:
        raise ValueError("sigma must lie in [0, 1]")
    if t_grid is not None:
        ts, step = _sample_times(t_grid)
        return {"constants": _semigroup_constants(op.eigenvalues, sigma, ts), "step": step}
    fits = []
    for n in refinements:
        ts, _ = _sample_times(np.linspace(0.0, T, n + 1))
        fits.append(_semigroup_constants(op.eigenvalues, sigma, ts))
    last, prev = fits[-1], fits[-2]
    diverging = {k: abs(last[k] - prev[k]) > rel_tol * max(abs(prev[k]), 1e-300) for k in last}
    return {"constants": last, "history": fits, "refinements": list(refinements),
            "diverging": diverging, "stable": not any(diverging.values())}
