"""Executable acceptance checks shared by the test-suite and ``fbm-averaging validate``.

Each check returns a ``CheckResult``; reports contain no timings so that
repeated runs with one seed are byte-identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import averaging as av
from . import fixed_point as fp
from .noise import CovarianceSpectrum, FbmPath, UniformGrid, sample_trace_class_fbm, substream
from .ou import OuSpec, fou_stationary_variance, ou_flow_check, ou_stationary_batch, scaling_identity_check
from .solver import (SystemSpec, apriori_bounds_check, appendix_inequalities_check, benchmark_spec,
                     contraction_diagnostics, fast_stationary, sample_noise, slow_increments, zero_spec)
from .spectral import DiagonalOperator
from .young import FracParams, OperatorPath, integral_bound_check, young_sum_integral, zahle_integral

BENCH_X0 = np.array([1.0, 0.5, -0.5, 0.25])


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else repr(v)
    return v


def report_json(results: list[CheckResult], level: str, seed: int) -> str:
    body = {"level": level, "seed": seed, "passed": all(r.passed for r in results),
            "checks": [{"name": r.name, "passed": r.passed, "details": _clean(r.details)} for r in results]}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------------ helpers

def random_integrand(rng, grid, n: int = 3) -> np.ndarray:
    """Smooth matrix-valued path ``A0 + A1 sin(2 pi k t + phi) + A2 t^2``."""
    A = rng.normal(size=(3, n, n))
    k = rng.integers(1, 4)
    phi = rng.uniform(0, 2 * np.pi)
    t = grid[:, None, None]
    return A[0] + A[1] * np.sin(2 * np.pi * k * t + phi) + A[2] * t ** 2


def _fbm3(seed, n, H=0.75, T=1.0):
    grid = UniformGrid.span(0.0, T, T / n)
    w = sample_trace_class_fbm(CovarianceSpectrum(np.ones(3)), H, grid, substream(seed, 7))
    return grid.points, w.values


# ---------------------------------------------------------------- criteria

def check_young_oracle(seeds=range(10), n: int = 2048) -> CheckResult:
    """Zähle integral versus left-point sums for smooth integrands and H = 0.75 paths."""
    p = FracParams.midpoint(0.7, 0.45)
    rel, shrink = [], []
    for s in seeds:
        rng = np.random.default_rng(substream(s, 8))
        g, w = _fbm3(s, n)
        psi = random_integrand(rng, g)
        gaps = []
        for stride in (2, 1):
            gs, ps, ws = g[::stride], psi[::stride], w[::stride]
            z = zahle_integral(OperatorPath(gs, ps), ws, p)
            y = young_sum_integral(OperatorPath(gs, ps), ws)
            gaps.append(float(np.linalg.norm(z - y) / np.linalg.norm(y)))
        rel.append(gaps[1])
        shrink.append(gaps[1] < gaps[0])
    ok = max(rel) < 1e-2 and all(shrink)
    return CheckResult("1 Young/Zahle oracle equivalence", ok,
                       {"max_rel_gap": max(rel), "rel_gaps": rel, "all_shrink": all(shrink)})


def check_constant_integrand(seeds=range(10), n: int = 2048) -> CheckResult:
    errs = []
    for s in seeds:
        g, w = _fbm3(s, n)
        ident = np.broadcast_to(np.eye(3), (g.size, 3, 3))
        z = zahle_integral(OperatorPath(g, ident), w)
        inc = w[-1] - w[0]
        errs.append(float(np.linalg.norm(z - inc) / np.linalg.norm(inc)))
    return CheckResult("2 Constant-integrand identity", max(errs) < 1e-3, {"max_rel_err": max(errs)})


def check_integral_bound(seeds=range(20), n: int = 1024) -> CheckResult:
    """Integral bound ratio is finite and stable (within 50%) under grid doubling."""
    p = FracParams.midpoint(0.7, 0.45)
    stab, worst = [], 0.0
    for s in seeds:
        rng = np.random.default_rng(substream(s, 9))
        g, w = _fbm3(s, 2 * n)
        psi = random_integrand(rng, g)
        r = [integral_bound_check(psi[::k], w[::k], p, g[::k])["max_ratio"] for k in (2, 1)]
        stab.append(r[1] / r[0])
        worst = max(worst, r[1])
    stab = np.array(stab)
    ok = bool(np.all(np.isfinite(stab)) and np.all(np.abs(stab - 1.0) <= 0.5) and np.isfinite(worst))
    return CheckResult("3 Integral bound ratio", ok,
                       {"max_ratio": worst, "doubling_ratio_min": float(stab.min()),
                        "doubling_ratio_max": float(stab.max())})


def check_ou(n_samples: int = 10_000, seed: int = 0, h: float = 0.05) -> CheckResult:
    """Scalar H = 1/2 stationary variance and the flow property."""
    lam, q2 = 1.0, 1.0
    spec = OuSpec(DiagonalOperator([lam]), CovarianceSpectrum([q2]), 1.0, 0.5)
    k = int(round(spec.default_past() / h))
    grid = UniformGrid.span(-k * h, 0.0, h)
    paths = sample_trace_class_fbm(spec.Q, 0.5, grid, substream(seed, 11), size=n_samples)
    z = ou_stationary_batch(spec, paths, h, k, k)[:, 0]
    var = float(z.var(ddof=1))
    target = float(fou_stationary_variance(lam, q2, 0.5))
    se = target * np.sqrt(2.0 / (n_samples - 1))
    ok_var = abs(var - target) <= 3 * se
    bench = benchmark_spec(0.1)
    noise = sample_noise(bench, 1.0, 1 / 256, 1 / 256, 20.0, 30.0, seed)
    flow = max(ou_flow_check(bench.ou(), noise.omega2, r, t) for r, t in ((0.0, 0.5), (0.25, 1.0)))
    return CheckResult("4 OU stationarity and flow", bool(ok_var and flow < 1e-3),
                       {"variance": var, "target": target, "se": se, "flow_residual": flow})


def check_scaling(seed: int = 0) -> CheckResult:
    bench = benchmark_spec(0.25)
    noise = sample_noise(bench, 1.0, 1 / 256, 1 / 256, 20.0, 60.0, seed)
    res = {}
    for e in (1.0, 0.25):
        sp = bench.with_eps(e)
        res[f"ou_eps_{e:g}"] = scaling_identity_check(sp.ou(), noise.omega2, 0.5)
        res[f"fixed_point_eps_{e:g}"] = fp.fixed_point_scaling_check(fp.FrozenFastSpec(sp, BENCH_X0),
                                                                     noise.omega2, 0.5)
    return CheckResult("5 Scaling identities", max(res.values()) < 1e-4, res)


def check_fixed_point_rate(seeds=range(10), eps_list=(0.1, 0.05)) -> CheckResult:
    bench = benchmark_spec(0.1)
    rates = np.zeros((len(seeds), len(eps_list)))
    for i, s in enumerate(seeds):
        noise = sample_noise(bench, 1.0, 1 / 256, 1 / 256, 20.0, 40.0, s)
        rng = np.random.default_rng(substream(s, 12))
        y1, y2 = rng.normal(size=(2, bench.n))
        for j, e in enumerate(eps_list):
            rates[i, j] = fp.attraction_rate(fp.FrozenFastSpec(bench.with_eps(e), BENCH_X0), noise.omega2, y1, y2)
    bound = np.array([(bench.lambda_B - bench.C1) / e for e in eps_list])
    ratio = rates[:, 1] / rates[:, 0]
    ok = bool(np.all(rates >= 0.85 * bound) and np.all(np.abs(ratio - 2.0) <= 0.3))
    half = np.array([(bench.lambda_B - 0.5) / e for e in eps_list])
    return CheckResult("6 Random fixed point rate", ok,
                       {"min_rate_over_bound": float(np.min(rates / bound)),
                        "min_rate_over_bound_C1_half": float(np.min(rates / half)), "halving_ratio_min": float(ratio.min()),
                        "halving_ratio_max": float(ratio.max())})


def check_lipschitz_in_x(n_pairs: int = 20, eps_list=(0.1, 0.05), seed: int = 0) -> CheckResult:
    bench = benchmark_spec(0.1)
    noise = sample_noise(bench, 1.0, 1 / 256, 1 / 256, 1.0, 120.0, seed)
    rng = np.random.default_rng(substream(seed, 13))
    pairs = rng.normal(scale=1.5, size=(n_pairs, 2, bench.n))
    bound = bench.C1 / (bench.lambda_B - bench.C1) * 1.1
    worst = {}
    for e in eps_list:
        spec = fp.FrozenFastSpec(bench.with_eps(e), pairs.reshape(-1, bench.n))
        Y = fp.pullback_fixed_point(spec, noise.omega2, 1e-10).Y_F.reshape(n_pairs, 2, bench.n)
        q = np.linalg.norm(Y[:, 0] - Y[:, 1], axis=1) / np.linalg.norm(pairs[:, 0] - pairs[:, 1], axis=1)
        worst[f"eps_{e:g}"] = float(q.max())
    return CheckResult("7 Lipschitz dependence on x", max(worst.values()) <= bound,
                       {**worst, "bound": bound, "bound_C1_half": 0.5 / (bench.lambda_B - 0.5) * 1.1})


def check_fbar(seed: int = 0, M: int = 500, n_pairs: int = 12, smooth_paths: int = 64) -> CheckResult:
    bench = benchmark_spec(0.1)
    lamB = bench.lambda_B
    rng = np.random.default_rng(substream(seed, 14))
    xs = np.vstack([BENCH_X0, rng.normal(scale=1.0, size=(4, bench.n))])
    m, ci_m = av.average_drift_mc(bench, xs, M, substream(seed, 15))
    e, ci_e = av.average_drift_ergodic(bench, xs, 200.0 / lamB, substream(seed, 16))
    agree = bool(np.all(np.abs(m - e) <= np.sqrt(ci_m ** 2 + ci_e ** 2)))
    # Lipschitz quotient with common random numbers
    x1 = rng.normal(scale=1.0, size=(n_pairs, bench.n))
    x2 = x1 + rng.normal(scale=0.5, size=(n_pairs, bench.n))
    f12, ci12 = av.average_drift_mc(bench, np.vstack([x1, x2]), M, substream(seed, 17))
    cache = {tuple(x): v for x, v in zip(np.vstack([x1, x2]), f12)}
    audit = av.fbar_lipschitz_audit(lambda X: np.array([cache[tuple(x)] for x in X]), list(zip(x1, x2)),
                                    np.linalg.norm(ci12, axis=1))
    lip_bound = bench.c_prime * 1.1 + audit["slack"]
    fbar0 = av.gaussian_fbar(bench, BENCH_X0, 0.5, 0.25)[0]
    res = av.smoothed_ergodic_residual(bench, BENCH_X0, fbar0, [t / lamB for t in (50, 100, 200)],
                                       smooth_paths, substream(seed, 18))
    ok = agree and audit["max_ratio"] <= lip_bound and res["decreasing"]
    return CheckResult("8 Averaged drift audits", bool(ok),
                       {"mc_ergodic_agree": agree, "max_abs_diff": float(np.max(np.abs(m - e))),
                        "lipschitz_max": audit["max_ratio"], "lipschitz_bound": lip_bound,
                        "lipschitz_bound_C1_half": (0.5 + 0.25 / (lamB - 0.5)) * 1.1 + audit["slack"],
                        "smoothed_residual_median": res["median"]})


def check_khasminskii(seeds=range(10)) -> CheckResult:
    r = av.aux_error_checks(benchmark_spec(0.1), seeds=tuple(seeds))
    ok = r["y1y2_ok"] and r["yyhat_ok"] and r["guard_ok"]
    return CheckResult("9 Auxiliary error scalings", bool(ok),
                       {"y1y2_mean_ratio": r["y1y2_mean_ratio"], "yyhat_slope": r["yyhat_slope"],
                        "slope_threshold": 1.0 + 0.55 - 0.3})


def check_convergence(seeds=range(20), jobs: int = 1, cfg: av.ConvergenceConfig | None = None) -> CheckResult:
    cfg = av.ConvergenceConfig(seeds=tuple(seeds)) if cfg is None else cfg
    out = av.convergence_experiment(benchmark_spec(0.1), cfg, jobs)
    s = out["summary"]
    ok = s["monotone"] and s["halved"] and s["control_ok"]
    return CheckResult("10 Averaging convergence", bool(ok),
                       {"eps": s["eps"], "median_e_sup": s["median_e_sup"], "control_max": s["control_max"],
                        "triangle_ok": s["triangle_ok"]})


def check_apriori(seeds=range(3), seed: int = 0) -> CheckResult:
    bench = benchmark_spec(0.1)
    ap = apriori_bounds_check(bench, list(seeds))
    # contraction diagnostics on a coarse Picard grid
    dt = 1 / 64
    noise = sample_noise(bench, 1.0, 1 / 4096, 1 / 4096 / 0.2, 5.0, None, seed)
    sp = bench.with_eps(0.2)
    K = 64
    t = np.arange(K + 1) * dt
    w1 = slow_increments(noise.omega1, dt, K)
    Z = fast_stationary(sp, noise.omega2, dt, K)
    cd = contraction_diagnostics(sp, t, w1, Z, BENCH_X0, np.zeros(4), seed=seed)
    app = appendix_inequalities_check(rhos=(1.0, 10.0, 100.0))
    ok = ap["x_ok"] and cd["C_decreasing"] and app["K_decreasing"] and app["inq_rho_bounded"]
    return CheckResult("11 A-priori bounds and contraction", bool(ok),
                       {"x_spread_max": ap["max_spread"], "C_rho": cd["C_rho"], "K_rho": app["K"],
                        "inq_rho_ratio": app["inq_rho_ratio"]})


# -------------------------------------------------------------- quick suite

def check_zero_system() -> CheckResult:
    """All-zero coefficients and noise: every solver stays at the linear flow."""
    from .solver import solve_coupled
    spec = zero_spec(4, 0.1)
    noise = sample_noise(spec, 1.0, 1 / 256, 1 / 256, 10.0, None, 0)
    sol = solve_coupled(spec, noise, BENCH_X0, np.ones(4), 1.0, 1 / 256)
    exact = np.exp(-np.outer(sol.t, spec.A.eigenvalues)) * BENCH_X0
    err = float(np.max(np.abs(sol.X - exact)))
    return CheckResult("zero system reduces to the semigroup", err < 1e-12, {"max_err": err})


def check_fixed_point_constant() -> CheckResult:
    from .solver import _replace
    bench = benchmark_spec(0.1)
    spec = _replace(bench, g=lambda x, y: 1.0 + 0.0 * (x + y), C1=0.0, C2=2.0)
    w = FbmPath.zeros(UniformGrid.span(-200.0, 1.0, 1 / 64), 4)
    y = fp.pullback_fixed_point(fp.FrozenFastSpec(spec, BENCH_X0), w, 1e-12).Y_F
    err = float(np.max(np.abs(y - 1.0 / bench.B.eigenvalues)))
    return CheckResult("constant forcing fixed point", err < 1e-9, {"max_err": err})


def run_suite(level: str = "quick", seed: int = 0, jobs: int = 1) -> list[CheckResult]:
    if level == "quick":
        s = [seed, seed + 1, seed + 2]
        return [check_zero_system(), check_fixed_point_constant(), check_constant_integrand(s),
                check_young_oracle(s), check_integral_bound(s, 512), check_ou(2000, seed), check_scaling(seed),
                check_fixed_point_rate(s), check_lipschitz_in_x(10, seed=seed)]
    if level == "full":
        r = range(seed, seed + 20)
        return [check_young_oracle(range(seed, seed + 10)), check_constant_integrand(range(seed, seed + 10)),
                check_integral_bound(r), check_ou(10_000, seed), check_scaling(seed),
                check_fixed_point_rate(range(seed, seed + 10)), check_lipschitz_in_x(20, seed=seed),
                check_fbar(seed), check_khasminskii(range(seed, seed + 10)), check_convergence(r, jobs),
                check_apriori(range(seed, seed + 3), seed)]
    raise ValueError("level must be 'quick' or 'full'")
