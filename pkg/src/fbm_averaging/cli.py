"""Command line entry point ``fbm-averaging``."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import averaging as av
from . import config as cf
from . import fixed_point as fp
from . import validation as va
from .io import write_csv, write_text
from .noise import UniformGrid, estimate_holder_exponent, sample_trace_class_fbm, substream, write_path_csv
from .solver import fast_stationary, sample_noise
from .young import OperatorPath, young_sum_integral, zahle_integral


def _x_hash(x) -> str:
    return hashlib.sha1(np.ascontiguousarray(x, dtype=float).tobytes()).hexdigest()[:12]


def _points(cfg: cf.ExperimentConfig, n: int, rng) -> np.ndarray:
    x0 = va.BENCH_X0[:n] if n <= 4 else np.zeros(n)
    k = cfg.experiment.n_points
    return np.vstack([x0, x0 + rng.normal(scale=0.5, size=(k - 1, n))]) if k > 1 else x0[None]


def cmd_fbm_sample(cfg, seed, out, jobs=1) -> int:
    spec = cfg.build_system()
    nc = cfg.noise
    H = spec.hurst.H1 if nc.fbm_H is None else nc.fbm_H
    grid = UniformGrid.span(0.0, nc.fbm_T, nc.fbm_T / nc.fbm_n)
    path = sample_trace_class_fbm(spec.Q1, H, grid, substream(seed, 1), paper_covariance=nc.paper_covariance)
    write_path_csv(path, out / "fbm_path.csv")
    rows = []
    for i in range(path.n_modes):
        est = estimate_holder_exponent(grid.points, path.values[:, i]) if grid.size >= 256 else float("nan")
        rows.append([i + 1, H, est])
    write_csv(out / "fbm_holder.csv", ["mode", "hurst", "estimated_exponent"], rows)
    return 0


def cmd_validate(cfg, seed, out, jobs=1, level="quick") -> int:
    cfg.build_system()
    if cfg.system.model == "zero":
        results = [va.check_zero_system(), va.check_fixed_point_constant(),
                   va.check_constant_integrand([seed, seed + 1])]
    else:
        results = va.run_suite(level, seed, jobs)
    for r in results:
        print(r.line())
    write_text(out / f"validate_{level}.json", va.report_json(results, level, seed))
    return 0 if all(r.passed for r in results) else 1


def _conv_config(cfg, seed) -> av.ConvergenceConfig:
    e = cfg.experiment
    fb = av.FbarConfig(e.fbar_spacing, e.fbar_chains, e.fbar_T_erg, e.fbar_h, int(seed) + 12345)
    return av.ConvergenceConfig(eps_list=tuple(e.eps_list), seeds=tuple(range(seed, seed + e.seeds)), T=e.T,
                                dt=cfg.solver.dt, h2=cfg.noise.h2, gamma=e.gamma, solver_tol=e.solver_tol,
                                control_seeds=tuple(range(seed, seed + min(3, e.seeds))), fbar=fb)


def cmd_converge(cfg, seed, out, jobs=1) -> int:
    spec = cfg.build_system()
    res = av.convergence_experiment(spec, _conv_config(cfg, seed), jobs)
    write_csv(out / "convergence.csv", av.CSV_HEADER, ([r[k] for k in av.CSV_HEADER] for r in res["rows"]))
    write_csv(out / "convergence_control.csv", av.CSV_HEADER,
              ([r[k] for k in av.CSV_HEADER] for r in res["control_rows"]))
    s = res["summary"]
    write_text(out / "convergence_summary.json", json.dumps(va._clean(s), indent=2, sort_keys=True) + "\n")
    for e, m in zip(s["eps"], s["median_e_sup"]):
        print(f"eps={e:g}  median e_sup={m:.4g}")
    ok = s["monotone"] and s["halved"] and s["control_ok"]
    print(f"monotone={s['monotone']} halved={s['halved']} control_ok={s['control_ok']}")
    return 0 if ok else 1


def _fast_noise(spec, cfg, seed, horizon):
    e = cfg.experiment
    h2 = cfg.noise.h2
    return sample_noise(spec, e.T, cfg.solver.dt, h2, horizon, 120.0, seed, cfg.noise.paper_covariance)


def cmd_fixed_point(cfg, seed, out, jobs=1) -> int:
    base = cfg.build_system()
    e = cfg.experiment
    rows, vals = [], []
    for s in range(seed, seed + e.seeds):
        noise = _fast_noise(base, cfg, s, 20.0)
        rng = np.random.default_rng(substream(s, 20))
        xs = _points(cfg, base.n, rng)
        for eps in e.eps_list:
            spec = base.with_eps(eps)
            for x in xs:
                fs = fp.FrozenFastSpec(spec, x)
                res = fp.pullback_fixed_point(fs, noise.omega2, 1e-10)
                y1, y2 = rng.normal(size=(2, base.n))
                rate = fp.attraction_rate(fs, noise.omega2, y1, y2)
                lip = fp.lipschitz_in_x(spec, noise.omega2, x, x + rng.normal(scale=0.5, size=base.n))
                rad = fp.absorbing_radius(fs, noise.omega2)["radius"]
                rows.append([_x_hash(x), eps, s, rate, lip, rad, res.cauchy_gap])
                vals.append([_x_hash(x), eps, s, *res.Y_F])
    write_csv(out / "fixed_point.csv", ["x_hash", "eps", "seed", "rate", "lipschitz_ratio", "radius", "cauchy_gap"],
              rows)
    write_csv(out / "fixed_point_values.csv", ["x_hash", "eps", "seed"] + [f"Y_{i + 1}" for i in range(base.n)], vals)
    return 0


def cmd_average_drift(cfg, seed, out, jobs=1) -> int:
    spec = cfg.build_system()
    e = cfg.experiment
    xs = _points(cfg, spec.n, np.random.default_rng(substream(seed, 21)))
    m, ci_m = av.average_drift_mc(spec, xs, e.M, substream(seed, 22))
    g, ci_g = av.average_drift_ergodic(spec, xs, e.T_erg, substream(seed, 23))
    N = spec.n
    head = ([f"x_{i + 1}" for i in range(N)] + [f"mc_{i + 1}" for i in range(N)] + [f"mc_ci_{i + 1}" for i in range(N)]
            + [f"erg_{i + 1}" for i in range(N)] + [f"erg_ci_{i + 1}" for i in range(N)])
    write_csv(out / "average_drift.csv", head, (np.concatenate(r) for r in zip(xs, m, ci_m, g, ci_g)))
    agree = bool(np.all(np.abs(m - g) <= np.sqrt(ci_m ** 2 + ci_g ** 2)))
    print(f"MC and ergodic estimates agree within combined CI: {agree}")
    return 0 if agree else 1


def cmd_ou(cfg, seed, out, jobs=1) -> int:
    base = cfg.build_system()
    e = cfg.experiment
    dt = cfg.solver.dt
    K = int(round(e.T / dt))
    rows = []
    for s in range(seed, seed + e.seeds):
        noise = _fast_noise(base, cfg, s, e.T / min(e.eps_list))
        for eps in e.eps_list:
            Z = fast_stationary(base.with_eps(eps), noise.omega2, dt, K)
            rows += [[s, eps, n * dt, *Z[n]] for n in range(K + 1)]
    write_csv(out / "ou.csv", ["seed", "eps", "t"] + [f"Z_{i + 1}" for i in range(base.n)], rows)
    return 0


def cmd_integral(cfg, seed, out, jobs=1) -> int:
    spec = cfg.build_system()
    nc = cfg.noise
    grid = UniformGrid.span(0.0, nc.fbm_T, nc.fbm_T / nc.fbm_n)
    w = sample_trace_class_fbm(spec.Q1, spec.hurst.H1, grid, substream(seed, 1)).values
    g = grid.points
    N = w.shape[1]
    if cfg.experiment.integrand == "identity":
        psi = np.broadcast_to(np.eye(N), (g.size, N, N))
    else:
        psi = va.random_integrand(np.random.default_rng(substream(seed, 24)), g, N)
    rows = []
    for k in range(1, 9):
        j = int(round(k * (g.size - 1) / 8))
        z = zahle_integral(OperatorPath(g[:j + 1], psi[:j + 1]), w[:j + 1])
        y = young_sum_integral(OperatorPath(g[:j + 1], psi[:j + 1]), w[:j + 1])
        rows.append([g[0], g[j], *z, *y, *(w[j] - w[0])])
    head = (["t0", "t1"] + [f"zahle_{i + 1}" for i in range(N)] + [f"young_{i + 1}" for i in range(N)]
            + [f"increment_{i + 1}" for i in range(N)])
    write_csv(out / "integral.csv", head, rows)
    return 0


COMMANDS = {"fbm-sample": cmd_fbm_sample, "validate": cmd_validate, "converge": cmd_converge,
            "fixed-point": cmd_fixed_point, "average-drift": cmd_average_drift, "ou": cmd_ou,
            "integral": cmd_integral}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbm-averaging", description="Averaging experiments for fBm-driven slow-fast systems")
    p.add_argument("--print-defaults", action="store_true", help="print the default config as JSON and exit")
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON config file (defaults used if omitted)")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("--out", type=Path, help="output directory (overrides the config)")
        if name == "validate":
            sp.add_argument("level", nargs="?", choices=("quick", "full"), default="quick")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        print(cf.dumps(cf.ExperimentConfig()))
        return 0
    if args.command is None:
        parser.print_help()
        return 2
    try:
        cfg = cf.load(args.config) if args.config else cf.ExperimentConfig()
        cf.validate(cfg)
    except cf.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    seed = cfg.seed if args.seed is None else args.seed
    out = Path(cfg.output.directory) if args.out is None else args.out
    out.mkdir(parents=True, exist_ok=True)
    kw = {"level": args.level} if args.command == "validate" else {}
    return COMMANDS[args.command](cfg, seed, out, args.jobs, **kw)


if __name__ == "__main__":
    sys.exit(main())
