"""Ornstein-Uhlenbeck processes driven by (scaled) fractional Brownian motion.

Per mode ``dZ = -(lambda / eps) Z dt + d omega``.  The mild solution is
advanced with the exact one-step formula for a piecewise-linear driving
path,

    Z_{k+1} = e^{-mu h} Z_k + (omega_{k+1} - omega_k) (1 - e^{-mu h}) / (mu h),

with ``mu = lambda / eps``, run as a first-order IIR filter.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma as Gamma

import numpy as np
from scipy.signal import lfilter

from .noise import CovarianceSpectrum, FbmPath, scale_time
from .spectral import DiagonalOperator


@dataclass(frozen=True)
class OuSpec:
    B: DiagonalOperator
    Q: CovarianceSpectrum
    eps: float = 1.0
    H2: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.B.n != self.Q.n:
            raise ValueError("operator and covariance spectrum must have the same dimension")

    @property
    def lambda_B(self) -> float:
        return self.B.lambda_min

    @property
    def rates(self) -> np.ndarray:
        return self.B.eigenvalues / self.eps

    def default_past(self) -> float:
        """Truncation horizon (in the scaled time of ``Z^eps``)."""
        return 30.0 * self.eps / self.lambda_B


@dataclass(frozen=True)
class StationaryOuSample:
    value: np.ndarray
    t: float
    past_horizon: float
    tail_bound: float


def exp_coefficients(rates, h: float):
    """Decay ``e^{-mu h}`` and input gain ``(1 - e^{-mu h}) / (mu h)`` per mode."""
    rates = np.asarray(rates, dtype=float)
    a = np.exp(-rates * h)
    c = -np.expm1(-rates * h) / (rates * h)
    return a, c


def ou_recursion(rates, h: float, dw, z0=None) -> np.ndarray:
    """Run the exact one-step map over increments ``dw`` (time on axis -2, modes on -1).

    Returns the states at all ``K + 1`` grid points, the first being ``z0``.
    """
    dw = np.asarray(dw, dtype=float)
    rates = np.asarray(rates, dtype=float)
    a, c = exp_coefficients(rates, h)
    shape = dw.shape[:-2] + (dw.shape[-2] + 1, dw.shape[-1])
    out = np.empty(shape)
    z0 = np.zeros(dw.shape[:-2] + (dw.shape[-1],)) if z0 is None else np.broadcast_to(z0, dw.shape[:-2] + (dw.shape[-1],))
    out[..., 0, :] = z0
    for i in range(rates.size):
        zi = (a[i] * z0[..., i])[..., None]
        y, _ = lfilter([c[i]], [1.0, -a[i]], dw[..., i], axis=-1, zi=zi)
        out[..., 1:, i] = y
    return out


def ou_mild(rates, grid, w_values, z0) -> np.ndarray:
    """``Z(t) = S(t - t0) z0 + w(t) - mu int_t0^t S(t - r) w(r) dr`` for piecewise-linear ``w``.

    Follows the mild formula literally, so ``Z(t0) = z0 + w(t0)``.
    """
    grid = np.asarray(grid, dtype=float)
    w = np.asarray(w_values, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    h = grid[1] - grid[0]
    return ou_recursion(rates, h, np.diff(w, axis=0), np.asarray(z0, dtype=float) + w[0])


def ou_evolve(spec: OuSpec, Z0, omega2: FbmPath, window) -> tuple[np.ndarray, np.ndarray]:
    """Mild OU solution on ``[t0, t1]`` driven by the increments of ``omega2`` after ``t0``.

    ``omega2`` is the path that actually drives the equation (pass the scaled
    path for ``Z^eps``).  Returns ``(grid, values)``.
    """
    t0, t1 = window
    if t1 < t0:
        raise ValueError("window must satisfy t0 <= t1")
    g, w = omega2.window(t0, t1)
    if g.size == 1:
        return g, np.asarray(Z0, dtype=float)[None, :]
    return g, ou_recursion(spec.rates, omega2.step, np.diff(w, axis=0), np.asarray(Z0, dtype=float))


def _scaled(spec: OuSpec, omega2: FbmPath) -> FbmPath:
    return omega2 if spec.eps == 1.0 else scale_time(omega2, spec.eps)


def stationary_ou_path(spec: OuSpec, omega2: FbmPath, t0: float, t1: float, past: float | None = None,
                       scaled: bool = False):
    """``t -> Z^eps(theta_t omega2)`` on grid points of ``[t0, t1]``.

    ``omega2`` is the unscaled two-sided path unless ``scaled`` is set.  The
    recursion starts from 0 at ``t0 - past`` (truncated stationary formula,
    boundary term included) and runs forward; by the flow property every
    later state is the stationary value with a longer horizon.
    """
    past = spec.default_past() if past is None else past
    w = omega2 if scaled else _scaled(spec, omega2)
    start = t0 - past
    if start < w.t_min - 1e-9 * w.step:
        raise ValueError(f"two-sided path support [{w.t_min}, {w.t_max}] does not cover the past horizon {start}")
    k_past = int(round(past / w.step))
    start = t0 - k_past * w.step
    g, vals = w.window(start, t1)
    z = ou_recursion(spec.rates, w.step, np.diff(vals, axis=0))
    return g[k_past:], z[k_past:]


def ou_stationary(spec: OuSpec, omega2: FbmPath, t: float, past: float | None = None,
                  scaled: bool = False) -> StationaryOuSample:
    past = spec.default_past() if past is None else past
    w = omega2 if scaled else _scaled(spec, omega2)
    g, z = stationary_ou_path(spec, w, t, t, past, scaled=True)
    _, win = w.window(t - int(round(past / w.step)) * w.step, t)
    wmax = float(np.max(np.linalg.norm(win - win[-1], axis=1))) if win.size else 0.0
    tail = float(np.exp(-spec.lambda_B * past / spec.eps) * wmax)
    return StationaryOuSample(z[-1], t, past, tail)


def ou_stationary_batch(spec: OuSpec, paths: np.ndarray, step: float, i_t: int, k_past: int) -> np.ndarray:
    """Stationary values at index ``i_t`` for a batch of raw paths ``(S, M, N)``."""
    seg = paths[:, i_t - k_past:i_t + 1]
    return ou_recursion(spec.rates, step, np.diff(seg, axis=1))[:, -1]


def ou_flow_check(spec: OuSpec, omega2: FbmPath, r: float, t: float, past: float | None = None) -> float:
    """``|| evolve(Z(theta_r w)) over [r, t] - Z(theta_t w) ||`` on the driving path."""
    if not r < t:
        raise ValueError("need r < t")
    w = _scaled(spec, omega2)
    z_r = ou_stationary(spec, w, r, past, scaled=True).value
    _, z = ou_evolve(spec, z_r, w, (r, t))
    z_t = ou_stationary(spec, w, t, past, scaled=True).value
    return float(np.linalg.norm(z[-1] - z_t))


def scaling_identity_check(spec: OuSpec, omega2: FbmPath, r: float, past: float | None = None) -> float:
    """``|| Z(theta_{r/eps} omega2) - Z^eps(theta_r omega2) ||``.

    The left side runs the unit-scale equation on the unscaled path; the
    right side runs the ``B / eps`` equation on ``omega2(. / eps)``.
    """
    past = spec.default_past() if past is None else past
    unit = OuSpec(spec.B, spec.Q, 1.0, spec.H2)
    lhs = ou_stationary(unit, omega2, r / spec.eps, past / spec.eps).value
    rhs = ou_stationary(spec, omega2, r, past).value
    return float(np.linalg.norm(lhs - rhs))


def sublinearity_check(spec: OuSpec, paths, T: float, eps_list=(0.2, 0.1, 0.05, 0.02)) -> dict:
    """``m(eps) = eps * sup_{s <= T} ||Z^eps(theta_s w)||`` per path, with medians.

    Uses ``Z^eps(theta_s w) = Z(theta_{s/eps} w)`` so one unit-scale
    stationary trajectory per path serves every ``eps``.
    """
    unit = OuSpec(spec.B, spec.Q, 1.0, spec.H2)
    eps_list = list(eps_list)
    horizon = T / min(eps_list)
    m = np.zeros((len(paths), len(eps_list)))
    sup_unit = np.zeros(len(paths))
    for p, w in enumerate(paths):
        g, z = stationary_ou_path(unit, w, 0.0, horizon)
        nz = np.linalg.norm(z, axis=1)
        run = np.maximum.accumulate(nz)
        for k, e in enumerate(eps_list):
            j = int(round(T / e / w.step))
            m[p, k] = e * run[j]
        sup_unit[p] = run[int(round(T / w.step))]
    med = np.median(m, axis=0)
    return {"eps": eps_list, "m": m, "median": med,
            "decreasing": bool(np.all(np.diff(med) < 0)),
            "mean_sup_unit": float(sup_unit.mean())}


def fou_stationary_variance(lam, q_sq, H: float, paper_covariance: bool = False) -> np.ndarray:
    """Per-mode stationary variance ``q^2 H Gamma(2H) lambda^{-2H}`` (doubled with ``paper_covariance``)."""
    v = np.asarray(q_sq, dtype=float) * H * Gamma(2 * H) * np.asarray(lam, dtype=float) ** (-2 * H)
    return 2 * v if paper_covariance else v
