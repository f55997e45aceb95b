"""Mild solutions of the slow-fast system and their a-priori diagnostics.

Slow:  dX = A X dt + f(X, Y) dt + h(X) d omega_1
Fast:  dY = (1/eps) (B Y + g(X, Y)) dt + d omega_2(. / eps)

with ``A = -diag(lambda_A)``, ``B = -diag(lambda_B)``.  The workhorse is an
exponential Euler scheme; the fixed-point operator ``T`` (Picard) is kept as
an independent coarse-grid oracle.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .noise import CovarianceSpectrum, FbmPath, HurstPair, UniformGrid, sample_trace_class_fbm, substream
from .ou import OuSpec, stationary_ou_path
from .spectral import DiagonalOperator, GridFunction, HolderParams, weighted_holder_norm
from .young import FracParams, zahle_integral


@dataclass(frozen=True)
class SystemSpec:
    """Problem datum.  ``f``, ``g`` map ``(x, y) -> (..., N)``; ``h`` maps ``x`` to
    ``(..., N, N)`` or, when ``h_diagonal`` is set, to the diagonal ``(..., N)``."""

    A: DiagonalOperator
    B: DiagonalOperator
    f: Callable
    g: Callable
    h: Callable
    eps: float
    C1: float
    C2: float
    hurst: HurstPair
    Q1: CovarianceSpectrum
    Q2: CovarianceSpectrum
    c_h: float = 0.0
    c_Dh: float = 0.0
    c_D2h: float = 0.0
    f_bound: float = np.inf
    h_diagonal: bool = True
    name: str = "custom"

    def __post_init__(self):
        if self.A.n != self.B.n or self.Q1.n != self.A.n or self.Q2.n != self.A.n:
            raise ValueError("A, B, Q1, Q2 must share the truncation dimension")
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if not self.lambda_B > self.C1:
            raise ValueError(f"need lambda_B > C1 for the fast dynamics to contract (lambda_B={self.lambda_B}, C1={self.C1})")

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def lambda_B(self) -> float:
        return self.B.lambda_min

    @property
    def c_prime(self) -> float:
        return self.C1 + self.C1 ** 2 / (self.lambda_B - self.C1)

    def with_eps(self, eps: float) -> "SystemSpec":
        return _replace(self, eps=eps)

    def ou(self) -> OuSpec:
        return OuSpec(self.B, self.Q2, self.eps, self.hurst.H2)

    def h_apply(self, x, dw):
        hv = self.h(x)
        if self.h_diagonal:
            return hv * dw
        return np.einsum("...ij,...j->...i", hv, dw)


def _replace(spec, **kw):
    from dataclasses import replace
    return replace(spec, **kw)


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 0.0005
    picard_tol: float = 1e-8
    rho: float = 10.0
    gamma: float = 0.45
    alpha: float | None = None
    max_iter: int = 200

    def __post_init__(self):
        if self.dt <= 0 or self.picard_tol <= 0:
            raise ValueError("dt and picard_tol must be positive")


@dataclass
class SolutionPath:
    t: np.ndarray
    X: np.ndarray
    Y: np.ndarray | None = None
    Z: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def x_path(self) -> GridFunction:
        return GridFunction(self.t, self.X)

    def y_path(self) -> GridFunction:
        return GridFunction(self.t, self.Y)


# ---------------------------------------------------------------- benchmark

def _bench_f(x, y):
    return 0.5 * np.tanh(x + y)


def _bench_g(x, y):
    return 0.5 * x - 0.25 * y


def _bench_h(x):
    x = np.asarray(x, dtype=float)
    return np.broadcast_to((0.5 + 0.25 * np.tanh(x[..., :1])), x.shape)


def benchmark_spec(eps: float = 0.1, H1: float = 0.75, H2: float = 0.5) -> SystemSpec:
    """N = 4 benchmark.  ``C1 = 1`` is the joint Lipschitz constant of ``(f, g)``."""
    n = 4
    d2 = 4.0 / (3.0 * np.sqrt(3.0))     # max |tanh''|
    return SystemSpec(
        A=DiagonalOperator([1.0, 2.0, 3.0, 4.0]),
        B=DiagonalOperator([2.0, 3.0, 4.0, 5.0]),
        f=_bench_f, g=_bench_g, h=_bench_h, eps=eps,
        C1=1.0, C2=0.0, hurst=HurstPair(H1, H2),
        Q1=CovarianceSpectrum(1.0 / np.arange(1, n + 1) ** 2),
        Q2=CovarianceSpectrum(1.0 / np.arange(1, n + 1) ** 2),
        c_h=0.75 * np.sqrt(n), c_Dh=0.25 * np.sqrt(n), c_D2h=0.25 * d2 * np.sqrt(n),
        f_bound=0.5 * np.sqrt(n), h_diagonal=True, name="benchmark")


def zero_spec(n: int = 4, eps: float = 0.1) -> SystemSpec:
    def zero2(x, y):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))

    def zero1(x):
        return np.zeros(np.shape(x))

    return SystemSpec(A=DiagonalOperator(np.arange(1.0, n + 1)), B=DiagonalOperator(np.arange(2.0, n + 2)),
                      f=zero2, g=zero2, h=zero1, eps=eps, C1=0.0, C2=0.0, hurst=HurstPair(0.75, 0.5),
                      Q1=CovarianceSpectrum(np.zeros(n)), Q2=CovarianceSpectrum(np.zeros(n)),
                      f_bound=0.0, name="zero")


def audit_coefficients(spec: SystemSpec, n_pairs: int = 200, scale: float = 3.0, seed: int = 0) -> dict:
    """Randomised Lipschitz / growth / boundedness audit of ``f``, ``g``, ``h``."""
    rng = np.random.default_rng(seed)
    N = spec.n
    x1, y1, x2, y2 = (rng.normal(scale=scale, size=(n_pairs, N)) for _ in range(4))
    close = rng.random(n_pairs) < 0.5
    x2[close] = x1[close] + 1e-3 * rng.normal(size=(close.sum(), N))
    y2[close] = y1[close] + 1e-3 * rng.normal(size=(close.sum(), N))
    dn = np.linalg.norm(x1 - x2, axis=1) + np.linalg.norm(y1 - y2, axis=1)
    num = np.linalg.norm(spec.f(x1, y1) - spec.f(x2, y2), axis=1) \
        + np.linalg.norm(spec.g(x1, y1) - spec.g(x2, y2), axis=1)
    lip = float(np.max(num / dn))
    growth = np.linalg.norm(spec.g(x1, y1), axis=1) - spec.C1 * (np.linalg.norm(x1, axis=1) + np.linalg.norm(y1, axis=1))
    fb = float(np.max(np.linalg.norm(spec.f(x1, y1), axis=1)))

    def hs(x):
        hv = spec.h(x)
        return np.linalg.norm(hv.reshape(hv.shape[0], -1), axis=1)

    h_sup = float(np.max(hs(x1)))
    dx = np.linalg.norm(x1 - x2, axis=1)
    hd = spec.h(x1) - spec.h(x2)
    h_lip = float(np.max(np.linalg.norm(hd.reshape(n_pairs, -1), axis=1) / dx))
    tol = 1.001
    return {"lipschitz": lip, "g_growth_excess": float(growth.max()), "f_sup": fb,
            "h_sup": h_sup, "h_lipschitz": h_lip,
            "ok": bool(lip <= spec.C1 * tol + 1e-12 and growth.max() <= spec.C2 * tol + 1e-12
                       and fb <= spec.f_bound * tol + 1e-12
                       and (spec.c_h == 0 or h_sup <= spec.c_h * tol)
                       and (spec.c_Dh == 0 or h_lip <= spec.c_Dh * tol))}


# ------------------------------------------------------------ noise plumbing

@dataclass(frozen=True)
class NoisePair:
    """Slow noise on ``[0, T]`` and unscaled two-sided fast noise."""

    omega1: FbmPath
    omega2: FbmPath


def sample_noise(spec: SystemSpec, T: float, dt1: float, h2: float, horizon: float, past: float | None,
                 seed: int, paper_covariance: bool = False) -> NoisePair:
    """``omega1`` with step ``dt1`` on ``[0, T]``; ``omega2`` with step ``h2`` on ``[-past, horizon]``."""
    past = 30.0 / spec.lambda_B if past is None else past
    g1 = UniformGrid.span(0.0, T, dt1)
    k = int(np.ceil(past / h2 - 1e-9))
    g2 = UniformGrid.span(-k * h2, int(np.ceil(horizon / h2 - 1e-9)) * h2, h2)
    w1 = sample_trace_class_fbm(spec.Q1, spec.hurst.H1, g1, substream(seed, 1), paper_covariance=paper_covariance)
    w2 = sample_trace_class_fbm(spec.Q2, spec.hurst.H2, g2, substream(seed, 2), paper_covariance=paper_covariance)
    return NoisePair(w1, w2)


def _stride(step_big: float, step_small: float) -> int:
    k = step_big / step_small
    r = int(round(k))
    if r < 1 or abs(k - r) > 1e-7 * k:
        raise ValueError(f"step {step_big} is not a multiple of the path step {step_small}")
    return r


def slow_increments(omega1: FbmPath, dt: float, K: int) -> np.ndarray:
    s = _stride(dt, omega1.step)
    j0 = omega1.index(0.0)
    if j0 + K * s >= omega1.values.shape[0]:
        raise ValueError("slow noise does not cover [0, T]")
    return omega1.values[j0:j0 + K * s + 1:s]


def fast_stationary(spec: SystemSpec, omega2: FbmPath, dt: float, K: int, unit_path=None) -> np.ndarray:
    """``Z^eps(theta_{t_n} omega2) = Z(theta_{t_n / eps} omega2)`` at ``t_n = n dt``.

    ``unit_path`` may hold a precomputed unit-scale stationary trajectory
    ``(grid, values)`` starting at 0 so several ``eps`` can share it.
    """
    s = _stride(dt / spec.eps, omega2.step)
    if unit_path is None:
        unit = OuSpec(spec.B, spec.Q2, 1.0, spec.hurst.H2)
        unit_path = stationary_ou_path(unit, omega2, 0.0, K * s * omega2.step)
    g, z = unit_path
    if K * s >= z.shape[0]:
        raise ValueError("fast noise does not cover [0, T / eps]")
    return z[:K * s + 1:s]


# ----------------------------------------------------------- exp. Euler core

def _phi(lam, h):
    e = np.exp(-lam * h)
    return e, -np.expm1(-lam * h) / lam


def exp_euler(spec: SystemSpec, dt: float, X0, Y0, w1, Z, f_x=None, g_x=None, h_x=None,
              fbar=None) -> tuple[np.ndarray, np.ndarray | None]:
    """Shared stepping loop.

    ``f_x``, ``g_x``, ``h_x`` optionally supply the slow state fed into
    ``f``, ``g``, ``h`` at step ``n`` (callables of ``(n, X_n)``); this is how
    the frozen-block auxiliary processes reuse the scheme.  With ``fbar`` the
    fast equation is skipped and the drift is ``fbar(X)``.
    """
    K = w1.shape[0] - 1
    N = spec.n
    EA, PA = _phi(spec.A.eigenvalues, dt)
    phi1 = PA / dt
    X = np.empty((K + 1, N))
    X[0] = X0
    dw1 = np.diff(w1, axis=0)
    if fbar is not None:
        for n in range(K):
            x = X[n]
            X[n + 1] = EA * x + PA * fbar(x) + phi1 * spec.h_apply(x, dw1[n])
            if not np.all(np.isfinite(X[n + 1])):
                raise FloatingPointError(f"non-finite state at step {n + 1}")
        return X, None
    EB, PB = _phi(spec.B.eigenvalues / spec.eps, dt)
    PB = PB / spec.eps
    Y = np.empty((K + 1, N))
    Y[0] = Y0
    yt = np.asarray(Y0, dtype=float) - Z[0]
    for n in range(K):
        x = X[n]
        y = Y[n]
        xf = x if f_x is None else f_x(n, x)
        xg = x if g_x is None else g_x(n, x)
        xh = x if h_x is None else h_x(n, x)
        X[n + 1] = EA * x + PA * spec.f(xf, y) + phi1 * spec.h_apply(xh, dw1[n])
        yt = EB * yt + PB * spec.g(xg, y)
        Y[n + 1] = yt + Z[n + 1]
        if not (np.all(np.isfinite(X[n + 1])) and np.all(np.isfinite(yt))):
            raise FloatingPointError(f"non-finite state at step {n + 1}")
    return X, Y


def solve_coupled(spec: SystemSpec, noise: NoisePair, X0, Y0, T: float, dt: float,
                  unit_path=None) -> SolutionPath:
    """Exponential-Euler mild solve of the coupled system on ``[0, T]``."""
    X0 = np.asarray(X0, dtype=float)
    Y0 = np.asarray(Y0, dtype=float)
    K = int(round(T / dt))
    if K == 0:
        return SolutionPath(np.array([0.0]), X0[None].copy(), Y0[None].copy(), None, {"steps": 0})
    if abs(K * dt - T) > 1e-9 * T:
        raise ValueError("T must be a multiple of dt")
    w1 = slow_increments(noise.omega1, dt, K)
    Z = fast_stationary(spec, noise.omega2, dt, K, unit_path)
    X, Y = exp_euler(spec, dt, X0, Y0, w1, Z)
    t = np.arange(K + 1) * dt
    return SolutionPath(t, X, Y, Z, {"steps": K, "dt": dt, "eps": spec.eps})


def solve_averaged(spec: SystemSpec, fbar, omega1: FbmPath, X0, T: float, dt: float) -> SolutionPath:
    """Averaged slow equation with drift ``fbar`` and the same ``omega1``."""
    X0 = np.asarray(X0, dtype=float)
    K = int(round(T / dt))
    if K == 0:
        return SolutionPath(np.array([0.0]), X0[None].copy())
    w1 = slow_increments(omega1, dt, K)
    X, _ = exp_euler(spec, dt, X0, None, w1, None, fbar=fbar)
    return SolutionPath(np.arange(K + 1) * dt, X, None, None, {"steps": K, "dt": dt})


# -------------------------------------------------------------- operator T

def _product_weights(lam, h):
    """Exact weights of ``int_0^h e^{-lam (h - s)} F(s) ds`` for linear ``F``."""
    e = np.exp(-lam * h)
    p0 = -np.expm1(-lam * h) / lam
    w1 = (1.0 - p0 / h) / lam
    return e, p0 - w1, w1


def _drift_convolution(lam, h, F):
    """``int_0^{t_n} e^{-lam (t_n - r)} F(r) dr`` for the piecewise-linear interpolant of ``F``."""
    e, w0, w1 = _product_weights(lam, h)
    out = np.zeros_like(F)
    for n in range(F.shape[0] - 1):
        out[n + 1] = e * out[n] + w0 * F[n] + w1 * F[n + 1]
    return out


def stochastic_convolution(spec: SystemSpec, t, X, w1, alpha: float) -> np.ndarray:
    """``int_0^{t_n} S_A(t_n - r) h(X(r)) d omega_1(r)`` by the fractional (Zahle) formula."""
    lam = spec.A.eigenvalues
    hv = spec.h(X)
    out = np.zeros_like(X)
    for n in range(1, t.size):
        decay = np.exp(-np.outer(t[n] - t[:n + 1], lam))
        if spec.h_diagonal:
            psi = decay * hv[:n + 1]
        else:
            psi = decay[:, :, None] * hv[:n + 1]
        out[n] = zahle_integral(psi, w1[:n + 1], alpha, grid=t[:n + 1])
    return out


def operator_T_apply(spec: SystemSpec, t, X, Y, w1, Z, X0, Y0, alpha: float | None = None,
                     parts: bool = False):
    """Evaluate the four summands of ``T(u, omega_1, omega_2, u_0)`` on the grid ``t``.

    ``Z`` holds ``Z^eps(theta_t omega_2)`` on the grid.  Returns the new
    ``(X, Y)``; with ``parts`` also the linear part and the nonlinear part.
    """
    h = t[1] - t[0]
    if alpha is None:
        alpha = FracParams.midpoint(0.7, 0.45).alpha
    lamA, lamB = spec.A.eigenvalues, spec.B.eigenvalues / spec.eps
    lin_x = np.exp(-np.outer(t, lamA)) * X0
    lin_y = np.exp(-np.outer(t, lamB)) * (np.asarray(Y0) - Z[0]) + Z
    drift_x = _drift_convolution(lamA, h, spec.f(X, Y))
    drift_y = _drift_convolution(lamB, h, spec.g(X, Y)) / spec.eps
    stoch = stochastic_convolution(spec, t, X, w1, alpha)
    TX = lin_x + drift_x + stoch
    TY = lin_y + drift_y
    if parts:
        return TX, TY, (lin_x, lin_y), (drift_x + stoch, drift_y)
    return TX, TY


def _u_norm(t, X, Y, gamma, rho):
    return weighted_holder_norm(GridFunction(t, np.concatenate([X, Y], axis=1)),
                                HolderParams(gamma, rho, tilde_weight=True))


def picard_solve(spec: SystemSpec, t, w1, Z, X0, Y0, cfg: SolverConfig, X_init=None, Y_init=None) -> SolutionPath:
    """Iterate ``u <- T(u)`` in the ``gamma, rho, ~`` norm until the update is below tolerance."""
    X0 = np.asarray(X0, dtype=float)
    Y0 = np.asarray(Y0, dtype=float)
    lamA, lamB = spec.A.eigenvalues, spec.B.eigenvalues / spec.eps
    X = np.exp(-np.outer(t, lamA)) * X0 if X_init is None else X_init
    Y = np.exp(-np.outer(t, lamB)) * (Y0 - Z[0]) + Z if Y_init is None else Y_init
    gaps = []
    for it in range(1, cfg.max_iter + 1):
        TX, TY = operator_T_apply(spec, t, X, Y, w1, Z, X0, Y0, cfg.alpha)
        gap = _u_norm(t, TX - X, TY - Y, cfg.gamma, cfg.rho)
        gaps.append(gap)
        X, Y = TX, TY
        if gap < cfg.picard_tol:
            break
        if len(gaps) >= 6 and gaps[-1] > gaps[-4]:
            factor = (gaps[-1] / gaps[-4]) ** (1 / 3)
            raise RuntimeError(f"Picard iteration not contracting (measured factor {factor:.3g}); increase rho")
    else:
        raise RuntimeError(f"Picard iteration did not reach tolerance in {cfg.max_iter} iterations")
    g = np.array(gaps)
    factors = g[1:] / g[:-1] if g.size > 1 else np.array([])
    return SolutionPath(t, X, Y, Z, {"iterations": it, "gaps": gaps,
                                     "contraction": float(np.median(factors[factors > 0])) if np.any(factors > 0) else 0.0})


def _random_paths(rng, t, N, scale):
    k = np.arange(1, 4)
    amp = rng.normal(size=(2, 3, N)) * scale / k[:, None]
    ph = rng.uniform(0, 2 * np.pi, size=(2, 3, N))
    base = rng.normal(size=(2, N)) * scale
    out = base[:, None, :] + np.einsum("akn,tkn->atn", amp,
                                       np.sin(np.pi * k[None, :, None] * t[:, None, None] + ph[0][None]))
    return out[0], out[1]


def contraction_diagnostics(spec: SystemSpec, t, w1, Z, X0, Y0, rhos=(1.0, 10.0, 100.0), gamma: float = 0.45,
                            n_samples: int = 6, seed: int = 0, alpha: float | None = None) -> dict:
    """Fitted ``C(rho)``, ``c_T`` and the Lipschitz quotient of ``T`` per ``rho``.

    ``C(rho) = max ||N(u)|| / (1 + ||u||)`` over random smooth ``u`` where
    ``N`` is the nonlinear (drift plus stochastic) part of ``T``; the
    contraction factor is ``max ||T u - T v|| / ||u - v||`` over random pairs.
    """
    rng = np.random.default_rng(seed)
    N = spec.n
    samples = []
    for s in range(n_samples):
        scale = 10.0 ** rng.uniform(-1, 1)
        X, Y = _random_paths(rng, t, N, scale)
        Xb, Yb = X + _random_paths(rng, t, N, 0.3 * scale)[0], Y + _random_paths(rng, t, N, 0.3 * scale)[1]
        TX, TY, lin, nl = operator_T_apply(spec, t, X, Y, w1, Z, X0, Y0, alpha, parts=True)
        TXb, TYb = operator_T_apply(spec, t, Xb, Yb, w1, Z, X0, Y0, alpha)
        samples.append((X, Y, lin, nl, Xb, Yb, TX, TY, TXb, TYb))
    z_norm = weighted_holder_norm(GridFunction(t, Z), HolderParams(gamma))
    u0 = np.linalg.norm(X0) + np.linalg.norm(Y0)
    C, Lq, cT = [], [], []
    for rho in rhos:
        cr, lr, ct = 0.0, 0.0, 0.0
        for X, Y, lin, nl, Xb, Yb, TX, TY, TXb, TYb in samples:
            cr = max(cr, _u_norm(t, *nl, gamma, rho) / (1.0 + _u_norm(t, X, Y, gamma, rho)))
            d = _u_norm(t, X - Xb, Y - Yb, gamma, rho)
            lr = max(lr, _u_norm(t, TX - TXb, TY - TYb, gamma, rho) / d)
            ct = max(ct, _u_norm(t, *lin, gamma, rho) / max(u0 + z_norm, 1e-300))
        C.append(cr)
        Lq.append(lr)
        cT.append(ct)
    return {"rho": list(rhos), "C_rho": C, "contraction": Lq, "c_T": cT,
            "C_decreasing": bool(np.all(np.diff(C) < 0)),
            "contraction_decreasing": bool(np.all(np.diff(Lq) < 0))}


# ------------------------------------------------------------ bound checks

def apriori_bounds_check(spec: SystemSpec, seeds, eps_list=(0.2, 0.02, 0.002), T: float = 1.0,
                         dt: float = 0.0005, X0=None, Y0=None, gamma: float = 0.45, rho: float = 1.0) -> dict:
    """``||X^eps||_{gamma,rho,~} / (||X0|| + 1)`` and ``eps sup ||Y^eps||`` across ``eps``."""
    N = spec.n
    X0 = np.array([1.0, 0.5, -0.5, 0.25][:N] + [0.0] * max(0, N - 4)) if X0 is None else np.asarray(X0, float)
    Y0 = np.zeros(N) if Y0 is None else np.asarray(Y0, float)
    eps_list = list(eps_list)
    h2 = dt / max(eps_list)
    for e in eps_list:
        _stride(dt / e, h2)
    ratio = np.zeros((len(seeds), len(eps_list)))
    ysup = np.zeros_like(ratio)
    for i, seed in enumerate(seeds):
        noise = sample_noise(spec, T, dt, h2, T / min(eps_list), None, seed)
        unit = OuSpec(spec.B, spec.Q2, 1.0, spec.hurst.H2)
        up = stationary_ou_path(unit, noise.omega2, 0.0, noise.omega2.t_max)
        for k, e in enumerate(eps_list):
            sol = solve_coupled(spec.with_eps(e), noise, X0, Y0, T, dt, unit_path=up)
            xn = weighted_holder_norm(sol.x_path(), HolderParams(gamma, rho, tilde_weight=True))
            ratio[i, k] = xn / (np.linalg.norm(X0) + 1.0)
            ysup[i, k] = e * np.max(np.linalg.norm(sol.Y, axis=1))
    spread = ratio.max(axis=1) / np.maximum(ratio.min(axis=1), 1e-300)
    med_y = np.median(ysup, axis=0)
    return {"eps": eps_list, "x_ratio": ratio, "x_spread": spread, "max_spread": float(spread.max()),
            "eps_sup_y": ysup, "median_eps_sup_y": med_y,
            "x_ok": bool(spread.max() < 2.0), "y_decreasing": bool(np.all(np.diff(med_y) < 0))}


def _K_rho(rho, a, b, d, T, n_t=200):
    ts = np.geomspace(1e-6 * T, T, n_t)
    vals = []
    for t in ts:
        val, _ = integrate.quad(lambda v: np.exp(-rho * t * (1 - v)), 0.0, 1.0, weight="alg", wvar=(a, b),
                                limit=200)
        vals.append(t ** d * val)
    return float(max(vals))


def _inq_rho(rho, a, d, T, n_t=200):
    # int_0^t e^{-rho (t-r)} (t-r)^-a r^-d dr = t^{1-a-d} int_0^1 e^{-rho t (1-s)} s^-d (1-s)^-a ds
    ts = np.geomspace(1e-6 * T, T, n_t)
    vals = []
    for t in ts:
        val, _ = integrate.quad(lambda s: np.exp(-rho * t * (1 - s)), 0.0, 1.0, weight="alg", wvar=(-d, -a),
                                limit=200)
        vals.append(t ** (1 - a - d) * val)
    return float(max(vals)) / rho ** (a + d - 1)


def appendix_inequalities_check(a: float | None = None, b: float | None = None, d: float | None = None,
                                frac: FracParams | None = None, a2: float = 0.4, d2: float = 0.4,
                                rhos=(1.0, 10.0, 100.0, 1000.0), T: float = 1.0) -> dict:
    """``K(rho)`` (must decrease to 0) and the ``rho^{a+d-1}`` bound ratio (must stay bounded).

    Defaults for ``K`` are ``a = -alpha, b = alpha - 1, d = beta - gamma``.
    """
    if a is None or b is None or d is None:
        frac = frac or FracParams.midpoint(0.7, 0.45)
        a, b, d = -frac.alpha, frac.alpha - 1.0, frac.beta - frac.gamma
    if not (a > -1 and b > -1 and a + b >= -1 - 1e-12 and d > 0):
        raise ValueError("need a > -1, b > -1, a + b >= -1, d > 0")
    if not (a2 >= 0 and d2 >= 0 and a2 + d2 < 1):
        raise ValueError("need a, d >= 0 and a + d < 1")
    if min(rhos) < 1:
        raise ValueError("rho must be at least 1")
    K = [_K_rho(r, a, b, d, T) for r in rhos]
    ratios = [_inq_rho(r, a2, d2, T) for r in rhos]
    return {"rho": list(rhos), "abd": (a, b, d), "K": K, "K_decreasing": bool(np.all(np.diff(K) < 0)),
            "inq_rho_ratio": ratios, "inq_rho_max": float(max(ratios)),
            "inq_rho_bounded": bool(max(ratios) / min(ratios) < 10.0)}


def write_solution_csv(sol: SolutionPath, file):
    from .io import write_csv
    N = sol.X.shape[1]
    header = ["t"] + [f"X_{i + 1}" for i in range(N)] + [f"Y_{i + 1}" for i in range(N)]
    Y = sol.Y if sol.Y is not None else np.full_like(sol.X, np.nan)
    return write_csv(file, header, (np.concatenate([[t], x, y]) for t, x, y in zip(sol.t, sol.X, Y)))


def warn_slow_attraction(spec: SystemSpec):
    if spec.lambda_B - spec.C1 < 0.05 * spec.lambda_B:
        warnings.warn("lambda_B - C1 is small; pullback horizons will be long", RuntimeWarning)
