"""Random fixed points of the frozen fast equation.

For fixed ``x`` the fast equation ``dY = (1/eps)(B Y + g(x, Y)) dt + d omega_2(./eps)``
is run in conjugated form ``Y = Yt + Z^eps`` where ``Yt`` solves a random ODE.
The fixed point at time ``r`` is the pullback limit of solutions started
ever further in the past.  All runs are batched over leading axes (several
``x`` values or initial states at once).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .noise import FbmPath, scale_time
from .ou import OuSpec, ou_recursion, stationary_ou_path
from .solver import SystemSpec
from .spectral import GridFunction, holder_seminorm
from .noise import estimate_holder_exponent


@dataclass(frozen=True)
class FrozenFastSpec:
    base: SystemSpec
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape[-1] != self.base.n:
            raise ValueError("frozen state has the wrong dimension")
        object.__setattr__(self, "x", x)
        if self.base.lambda_B - self.base.C1 < 0.05 * self.base.lambda_B:
            warnings.warn("lambda_B - C1 is small; attraction is slow and horizons long", RuntimeWarning)

    @property
    def eps(self) -> float:
        return self.base.eps

    @property
    def rate_bound(self) -> float:
        return (self.base.lambda_B - self.base.C1) / self.base.eps


@dataclass
class FixedPointResult:
    Y_F: np.ndarray
    Z: np.ndarray
    pullback_horizon: float
    cauchy_gap: float
    start_gap: float
    rate_estimate: float = float("nan")
    radius: float = float("nan")


def frozen_step_coefficients(base: SystemSpec, h: float, eps: float):
    """Decay and drift gain of one exponential-Euler step of length ``h`` (scaled time)."""
    lam = base.B.eigenvalues / eps
    E = np.exp(-lam * h)
    P = -np.expm1(-lam * h) / lam / eps
    return E, P


def frozen_run(base: SystemSpec, x, Z, h: float, eps: float, y0, direct_noise=None) -> np.ndarray:
    """Frozen-``x`` trajectory on a uniform grid of step ``h``.

    ``Z[..., n, :]`` is ``Z^eps(theta_{t_n} omega_2)`` along the run.  The
    conjugated recursion ``Yt_{n+1} = E Yt_n + P g(x, Yt_n + Z_n)`` is used;
    with ``direct_noise`` (the increments of the scaled path) the equation is
    instead stepped directly in ``Y`` with the exact OU input gain.
    """
    E, P = frozen_step_coefficients(base, h, eps)
    K = Z.shape[-2] - 1
    shape = np.broadcast_shapes(np.shape(x), Z.shape[:-2] + Z.shape[-1:], np.shape(y0))
    out = np.empty(shape[:-1] + (K + 1, shape[-1]))
    y = np.broadcast_to(np.asarray(y0, dtype=float), shape).copy()
    out[..., 0, :] = y
    if direct_noise is not None:
        lam = base.B.eigenvalues / eps
        c = -np.expm1(-lam * h) / (lam * h)
        for n in range(K):
            y = E * y + P * base.g(x, y) + c * direct_noise[..., n, :]
            out[..., n + 1, :] = y
        return out
    yt = y - Z[..., 0, :]
    for n in range(K):
        yt = E * yt + P * base.g(x, yt + Z[..., n, :])
        out[..., n + 1, :] = yt + Z[..., n + 1, :]
    return out


def _driving(spec_base: SystemSpec, omega2: FbmPath, eps: float, route: str):
    if route == "scaled":
        return (omega2 if eps == 1.0 else scale_time(omega2, eps)), eps, 1.0
    if route == "unit":
        return omega2, 1.0, 1.0 / eps
    raise ValueError("route must be 'scaled' or 'unit'")


def _z_path(base: SystemSpec, w: FbmPath, eps_eff: float, t0: float, t1: float, past: float | None = None):
    ou = OuSpec(base.B, base.Q2, eps_eff, base.hurst.H2)
    return stationary_ou_path(ou, w, t0, t1, past, scaled=True)


def pullback_fixed_point(spec: FrozenFastSpec, omega2: FbmPath, tol: float = 1e-8, r: float = 0.0,
                         y_starts=None, route: str = "scaled", max_doublings: int = 12,
                         t0: float | None = None) -> FixedPointResult:
    """Pullback limit ``lim_t phi(t, theta_{-t} w, y0)`` evaluated at time ``r``.

    Horizons ``t0 * 2^k`` with ``t0 = 10 eps / (lambda_B - C1)``; stops when
    successive values differ by less than ``tol`` and the two starting points
    agree within ``tol``.  ``route='unit'`` evaluates the same object as
    ``Y_F^1(theta_{r/eps} w)`` on the unscaled path.
    """
    base = spec.base
    eps = base.eps
    w, eps_eff, tscale = _driving(base, omega2, eps, route)
    r_eff = r * tscale
    t0 = (10.0 * eps / (base.lambda_B - base.C1) if t0 is None else t0) * tscale
    N = base.n
    if y_starts is None:
        y_starts = np.stack([np.zeros(N), np.full(N, 5.0)])
    y_starts = np.asarray(y_starts, dtype=float)
    prev = None
    horizon = t0
    for k in range(max_doublings + 1):
        kh = int(np.ceil(horizon / w.step - 1e-9))
        start = r_eff - kh * w.step
        if start - 30.0 * eps_eff / base.lambda_B < w.t_min - 1e-9:
            raise RuntimeError(f"pullback did not converge before exhausting the path support (horizon {horizon / tscale:g})")
        _, Z = _z_path(base, w, eps_eff, start, r_eff)
        traj = frozen_run(base, spec.x[..., None, :] if spec.x.ndim > 1 else spec.x, Z, w.step, eps_eff,
                          y_starts if spec.x.ndim == 1 else y_starts[None])
        vals = traj[..., -1, :]
        start_gap = float(np.max(np.linalg.norm(vals[..., 0, :] - vals[..., -1, :], axis=-1)))
        cur = vals[..., 0, :]
        if prev is not None:
            gap = float(np.max(np.linalg.norm(cur - prev, axis=-1)))
            if gap < tol and start_gap < tol:
                return FixedPointResult(cur, Z[-1], horizon / tscale, gap, start_gap)
        prev = cur
        horizon *= 2.0
    raise RuntimeError("pullback iteration did not converge (is lambda_B > C1?)")


def fixed_point_trajectory(spec: FrozenFastSpec, omega2: FbmPath, t0: float, t1: float, tol: float = 1e-10,
                           route: str = "scaled"):
    """``r -> Y_F^eps(theta_r w, x)`` on grid points of ``[t0, t1]`` (forward from the pullback value)."""
    base = spec.base
    w, eps_eff, tscale = _driving(base, omega2, spec.eps, route)
    fp = pullback_fixed_point(spec, omega2, tol, t0, route=route)
    g, Z = _z_path(base, w, eps_eff, t0 * tscale, t1 * tscale)
    traj = frozen_run(base, spec.x, Z, w.step, eps_eff, fp.Y_F)
    return g / tscale, traj, Z


def attraction_rate(spec: FrozenFastSpec, omega2: FbmPath, y01, y02, window=None, floor: float = 1e-11) -> float:
    """Least-squares decay rate of ``log ||phi(t, w, y01) - phi(t, w, y02)||`` over ``window``."""
    y01, y02 = np.asarray(y01, dtype=float), np.asarray(y02, dtype=float)
    if np.allclose(y01, y02):
        raise ValueError("initial states must differ")
    base = spec.base
    if window is None:
        window = (0.0, 8.0 * spec.eps / (base.lambda_B - base.C1))
    w, eps_eff, _ = _driving(base, omega2, spec.eps, "scaled")
    lo, hi = (np.round(np.asarray(window) / w.step) * w.step)
    g, Z = _z_path(base, w, eps_eff, lo, hi)
    traj = frozen_run(base, spec.x, Z, w.step, eps_eff, np.stack([y01, y02]))
    d = np.linalg.norm(traj[0] - traj[1], axis=-1)
    keep = d > floor * d[0]
    if keep.sum() < 4:
        raise RuntimeError("trajectories merged before the fit window; shrink the window")
    slope = np.polyfit(g[keep] - g[0], np.log(d[keep]), 1)[0]
    return float(-slope)


def lipschitz_in_x(base: SystemSpec, omega2: FbmPath, x1, x2, eps: float | None = None, tol: float = 1e-10) -> float:
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    if np.allclose(x1, x2):
        raise ValueError("x1 and x2 must differ")
    spec_e = base if eps is None else base.with_eps(eps)
    fp = pullback_fixed_point(FrozenFastSpec(spec_e, np.stack([x1, x2])), omega2, tol)
    return float(np.linalg.norm(fp.Y_F[0] - fp.Y_F[1]) / np.linalg.norm(x1 - x2))


def absorbing_radius(spec: FrozenFastSpec, omega2: FbmPath, r: float = 0.0, span: float | None = None) -> dict:
    """``2 int_{-inf}^0 e^{(lambda_B - C1) s / eps} (1/eps) (C1 (||Z^eps(theta_{r+s} w)|| + ||x||) + C2) ds``.

    The constant part is integrated in closed form; the ``||Z||`` part
    exactly for its piecewise-linear interpolant over ``[-span, 0]`` with the
    remaining tail bounded by ``e^{-k span / eps} * max ||Z||``.
    """
    base = spec.base
    eps = spec.eps
    k = base.lambda_B - base.C1
    span = 40.0 * eps / k if span is None else span
    const = 2.0 * (base.C1 * float(np.linalg.norm(spec.x)) + base.C2) / k
    if base.C1 == 0.0:
        return {"radius": const, "tail": 0.0}
    w, eps_eff, _ = _driving(base, omega2, eps, "scaled")
    g, Z = _z_path(base, w, eps_eff, r - span, r)
    zn = np.linalg.norm(Z, axis=1)
    s = g - r
    mu = k / eps
    h = w.step
    # exact weights for int e^{mu s} * linear(s) over each cell, times 1/eps
    e0, e1 = np.exp(mu * s[:-1]), np.exp(mu * s[1:])
    a = (e1 - e0) / mu
    b = (e1 * h - a) / mu / h       # int over cell of e^{mu s} (s - s_left)/h
    integral = float(np.sum(zn[:-1] * (a - b) + zn[1:] * b)) / eps
    tail = float(np.exp(-mu * span) * zn.max() / k)
    return {"radius": const + 2.0 * base.C1 * integral, "tail": 2.0 * base.C1 * tail}


def fixed_point_scaling_check(spec: FrozenFastSpec, omega2: FbmPath, r: float, tol: float = 1e-12) -> float:
    """``|| Y_F^eps(theta_r w, x) - Y_F^1(theta_{r/eps} w, x) ||`` by two independent runs."""
    a = pullback_fixed_point(spec, omega2, tol, r, route="scaled").Y_F
    unit = FrozenFastSpec(spec.base.with_eps(1.0), spec.x)
    b = pullback_fixed_point(unit, omega2, tol, r / spec.eps, route="scaled",
                             t0=10.0 * spec.eps / (spec.base.lambda_B - spec.base.C1) / spec.eps).Y_F
    return float(np.linalg.norm(a - b))


def fixed_point_holder_check(spec: FrozenFastSpec, omega2: FbmPath, window, gamma: float,
                             levels: int = 3) -> dict:
    """Hölder seminorm of ``r -> Y_F(theta_r w, x)`` across dyadic subsamplings, plus an exponent estimate."""
    g, Y, _ = fixed_point_trajectory(spec, omega2, window[0], window[1])
    norms = []
    for lv in range(levels):
        s = 2 ** (levels - 1 - lv)
        norms.append(holder_seminorm(GridFunction(g[::s], Y[::s]), gamma))
    est = estimate_holder_exponent(g, Y) if g.size >= 256 else float("nan")
    spread = max(norms) / max(min(norms), 1e-300) if max(norms) > 0 else 1.0
    return {"seminorms": norms, "spread": spread, "exponent": est, "n_points": g.size}


def fixed_point_invariance(spec: FrozenFastSpec, omega2: FbmPath, times, tol: float = 1e-10) -> float:
    """``max_t || phi(t, w, Y_F(w)) - Y_F(theta_t w) ||`` (forward invariance)."""
    base = spec.base
    w, eps_eff, _ = _driving(base, omega2, spec.eps, "scaled")
    fp0 = pullback_fixed_point(spec, omega2, tol, 0.0)
    worst = 0.0
    for t in times:
        g, Z = _z_path(base, w, eps_eff, 0.0, t)
        y = frozen_run(base, spec.x, Z, w.step, eps_eff, fp0.Y_F)[-1]
        yt = pullback_fixed_point(spec, omega2, tol, t).Y_F
        worst = max(worst, float(np.linalg.norm(y - yt)))
    return worst


def conjugation_residual(spec: FrozenFastSpec, omega2: FbmPath, t0: float, t1: float, y0) -> float:
    """Direct stepping in ``Y`` versus the conjugated ``Yt + Z`` recursion from the same start."""
    base = spec.base
    w, eps_eff, _ = _driving(base, omega2, spec.eps, "scaled")
    g, Z = _z_path(base, w, eps_eff, t0, t1)
    a = frozen_run(base, spec.x, Z, w.step, eps_eff, y0)
    _, vals = w.window(t0, t1)
    b = frozen_run(base, spec.x, Z, w.step, eps_eff, y0, direct_noise=np.diff(vals, axis=0))
    return float(np.max(np.linalg.norm(a - b, axis=-1)))
