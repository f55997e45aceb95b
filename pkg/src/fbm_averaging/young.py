"""Pathwise integrals against Hölder paths via Weyl fractional derivatives.

Integrands and integrators are taken as piecewise-linear interpolants of
their grid samples.  For such functions both Weyl derivatives have closed
forms (sums of power functions over cells), so the only numerical step is
the outer ``dr`` integral, done by Gauss-Legendre on each cell after a
smoothing change of variables that removes the endpoint power singularities.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma as Gamma

import numpy as np
from scipy.signal import fftconvolve

from .spectral import GridFunction, holder_seminorm


@dataclass(frozen=True)
class FracParams:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        a, b, g = self.alpha, self.beta, self.gamma
        if not (0.0 < a < g and a + b > 1.0 and b > 0.5):
            raise ValueError(
                f"need 0 < alpha < gamma, alpha + beta > 1, beta > 1/2; got alpha={a}, beta={b}, gamma={g}")
        if not g <= 1.0 or not b < 1.0:
            raise ValueError("Hölder exponents must be below 1")

    @classmethod
    def midpoint(cls, beta: float, gamma: float) -> "FracParams":
        return cls((1.0 - beta + gamma) / 2.0, beta, gamma)


@dataclass(frozen=True)
class OperatorPath:
    """Per-time linear maps (``(M, N, N)``), diagonals (``(M, N)``) or scalars (``(M,)``)."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float)
        if v.shape[0] != g.size:
            raise ValueError("values length must equal grid length")
        if not np.all(np.isfinite(v)):
            raise ValueError("operator path has non-finite entries")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)


def _uniform(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise ValueError("need at least two grid points")
    d = np.diff(grid)
    dt = (grid[-1] - grid[0]) / (grid.size - 1)
    if dt <= 0 or np.max(np.abs(d - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError("grid must be uniform and increasing")
    return grid, dt


def _cut(grid, values, window):
    if window is None:
        return grid, values
    t1, t2 = window
    step = grid[1] - grid[0]
    j1 = (t1 - grid[0]) / step
    j2 = (t2 - grid[0]) / step
    r1, r2 = int(round(j1)), int(round(j2))
    if abs(j1 - r1) > 1e-7 * max(1, abs(j1)) or abs(j2 - r2) > 1e-7 * max(1, abs(j2)):
        raise ValueError("integration window is not aligned with the grid")
    if r1 < 0 or r2 >= grid.size or r2 <= r1:
        raise ValueError("integration window outside the grid")
    return grid[r1:r2 + 1], values[r1:r2 + 1]


def weyl_left_derivative(psi, alpha: float, T1: float, r, grid=None) -> np.ndarray:
    """``D^alpha_{T1+} psi[r]`` of the piecewise-linear interpolant of ``psi``.

    For an absolutely continuous integrand the Weyl form equals
    ``(psi(T1) (r - T1)^-alpha + int_T1^r psi'(q) (r - q)^-alpha dq) / Gamma(1 - alpha)``,
    which is exact cell by cell.
    """
    if isinstance(psi, OperatorPath):
        grid, vals = psi.grid, psi.values
    else:
        grid, vals = np.asarray(grid, dtype=float), np.asarray(psi, dtype=float)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    grid, dt = _uniform(grid)
    j0 = int(round((T1 - grid[0]) / dt))
    grid, vals = grid[j0:], vals[j0:]
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= T1) or np.any(r > grid[-1] + 1e-12):
        raise ValueError("r must lie in (T1, T2]")
    s = np.diff(vals, axis=0) / dt
    out = []
    for ri in r:
        lo = grid[:-1]
        hi = np.minimum(grid[1:], ri)
        mask = lo < ri
        w = ((ri - lo[mask]) ** (1 - alpha) - (ri - hi[mask]) ** (1 - alpha)) / (1 - alpha)
        acc = vals[0] * (ri - T1) ** -alpha + np.tensordot(w, s[mask], axes=(0, 0))
        out.append(acc / Gamma(1 - alpha))
    out = np.array(out)
    return out[0] if scalar else out


def weyl_right_derivative(omega, alpha: float, T2: float, r, grid=None) -> np.ndarray:
    """Sign-normalised ``D^{1-alpha}_{T2-} omega_{T2-}[r]``.

    Returns ``int_r^T2 omega'(q) (q - r)^{alpha - 1} dq / Gamma(alpha)``; the
    complex unit factors of the left and right derivatives are absorbed so that
    the pathwise integral of a constant equals the increment.
    """
    if isinstance(omega, GridFunction):
        grid, vals = omega.grid, omega.values
    else:
        grid, vals = np.asarray(grid, dtype=float), np.asarray(omega, dtype=float)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    grid, dt = _uniform(grid)
    j2 = int(round((T2 - grid[0]) / dt))
    grid, vals = grid[:j2 + 1], vals[:j2 + 1]
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < grid[0] - 1e-12) or np.any(r >= T2):
        raise ValueError("r must lie in [T1, T2)")
    b = np.diff(vals, axis=0) / dt
    out = []
    for ri in r:
        lo = np.maximum(grid[:-1], ri)
        hi = grid[1:]
        mask = hi > ri
        w = ((hi[mask] - ri) ** alpha - (lo[mask] - ri) ** alpha) / alpha
        out.append(np.tensordot(w, b[mask], axes=(0, 0)) / Gamma(alpha))
    out = np.array(out)
    return out[0] if scalar else out


def _smoothstep(u):
    return u * u * (3 - 2 * u), 6 * u * (1 - u)


def _nodes(m):
    x, w = np.polynomial.legendre.leggauss(m)
    return (x + 1) / 2, w / 2


def _toeplitz_sum(coef, weights, causal=True):
    """``out[j] = sum_{d>=1} weights[d] coef[j - d]`` (causal) or ``coef[j + d]`` (anti-causal)."""
    n = coef.shape[0]
    if n == 1:
        return np.zeros_like(coef)
    flat = coef.reshape(n, -1)
    w = weights[1:n]
    if not causal:
        flat = flat[::-1]
    conv = fftconvolve(flat, w[:, None], axes=0)[: n - 1]
    out = np.zeros_like(flat)
    out[1:] = conv
    if not causal:
        out = out[::-1]
    return out.reshape(coef.shape)


def _derivative_tables(grid, psi, omega, alpha, m):
    """Left and right derivatives at the quadrature nodes of every cell.

    Returns ``(D, R, W)`` with ``D[j, l]``, ``R[j, l]`` at node ``l`` of cell
    ``j`` and ``W[j, l]`` the corresponding quadrature weight in ``r``.
    """
    grid, dt = _uniform(grid)
    n = grid.size - 1
    u, wu = _nodes(m)
    xi, dxi = _smoothstep(u)
    s = np.diff(psi, axis=0) / dt           # integrand slopes per cell
    b = np.diff(omega, axis=0) / dt         # integrator slopes per cell
    p = 1.0 / (1.0 - alpha)
    xi0 = xi ** p                            # first cell: flattens (r - T1)^-alpha
    dxi0 = p * xi ** (p - 1) * dxi
    D = np.empty((n, m) + psi.shape[1:])
    R = np.empty((n, m) + omega.shape[1:])
    W = np.empty((n, m))
    W[:] = dt * wu * dxi
    W[0] = dt * wu * dxi0
    d = np.arange(n + 1, dtype=float)
    g1, ga = Gamma(1 - alpha), Gamma(alpha)
    for l in range(m):
        x = xi[l]
        # left: psi_0 (r-T1)^-a + sum_{k<j} s_k [(r-t_k)^{1-a} - (r-t_{k+1})^{1-a}]/(1-a) + s_j (r-t_j)^{1-a}/(1-a)
        wl = dt ** (1 - alpha) * ((d + x) ** (1 - alpha) - (d - 1 + x).clip(0) ** (1 - alpha)) / (1 - alpha)
        rel = (np.arange(n) + x) * dt
        acc = _toeplitz_sum(s, wl)
        acc += s * (x * dt) ** (1 - alpha) / (1 - alpha)
        acc += psi[0] * (rel ** -alpha).reshape((n,) + (1,) * (psi.ndim - 1))
        D[:, l] = acc / g1
        # right: sum_{k>j} b_k [(t_{k+1}-r)^a - (t_k-r)^a]/a + b_j (t_{j+1}-r)^a/a
        wr = dt ** alpha * ((d + 1 - x) ** alpha - (d - x).clip(0) ** alpha) / alpha
        acc = _toeplitz_sum(b, wr, causal=False)
        acc += b * ((1 - x) * dt) ** alpha / alpha
        R[:, l] = acc / ga
    # first cell uses its own node positions; evaluate directly
    t1 = grid[0]
    r0 = t1 + xi0 * dt
    D[0] = weyl_left_derivative(psi, alpha, t1, r0, grid=grid).reshape(D[0].shape)
    R[0] = weyl_right_derivative(omega, alpha, grid[-1], r0, grid=grid).reshape(R[0].shape)
    return D, R, W


def _pair_product(D, R):
    if D.ndim == R.ndim + 1:        # matrix times vector
        return np.einsum("...ij,...j->...i", D, R)
    if D.ndim + 1 == R.ndim:        # scalar times vector
        return D[..., None] * R
    return D * R


def zahle_integral(psi, omega, p: FracParams | float | None = None, window=None, grid=None,
                   m: int = 8) -> np.ndarray:
    """``int_T1^T2 psi d omega`` through the fractional integration-by-parts formula.

    ``psi`` is an ``OperatorPath`` (or array with ``grid``); ``omega`` holds
    integrator samples on the same grid.  ``p`` may be a ``FracParams`` or a
    bare ``alpha``; by default ``alpha = 1/2``.
    """
    if isinstance(psi, OperatorPath):
        grid, pv = psi.grid, psi.values
    else:
        pv = np.asarray(psi, dtype=float)
    ov = np.asarray(omega.values if hasattr(omega, "values") else omega, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if pv.shape[0] != grid.size or ov.shape[0] != grid.size:
        raise ValueError("integrand and integrator must live on the same grid")
    alpha = 0.5 if p is None else (p.alpha if isinstance(p, FracParams) else float(p))
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    g, pv_w = _cut(grid, pv, window)
    _, ov_w = _cut(grid, ov, window)
    D, R, W = _derivative_tables(g, pv_w, ov_w, alpha, m)
    prod = _pair_product(D, R)
    return np.tensordot(W.ravel(), prod.reshape((-1,) + prod.shape[2:]), axes=(0, 0))


def young_sum_integral(psi, omega, grid=None, window=None) -> np.ndarray:
    """Left-point Riemann-Stieltjes sum ``sum psi(t_i) (omega(t_{i+1}) - omega(t_i))``."""
    if isinstance(psi, OperatorPath):
        grid, pv = psi.grid, psi.values
    else:
        pv = np.asarray(psi, dtype=float)
    ov = np.asarray(omega, dtype=float)
    grid = np.asarray(grid, dtype=float)
    g, pv = _cut(grid, pv, window)
    _, ov = _cut(grid, ov, window)
    dw = np.diff(ov, axis=0)
    return _pair_product(pv[:-1], dw).sum(axis=0)


def trapezoid_stieltjes(psi_values, omega_values) -> np.ndarray:
    """Exact integral of the two piecewise-linear interpolants against each other."""
    pv = np.asarray(psi_values, dtype=float)
    dw = np.diff(np.asarray(omega_values, dtype=float), axis=0)
    return _pair_product(0.5 * (pv[:-1] + pv[1:]), dw).sum(axis=0)


def _op_norm_path(values):
    v = np.asarray(values, dtype=float)
    return v.reshape(v.shape[0], -1)


def holder_norm(grid, values, gamma: float) -> float:
    """``||f||_gamma = sup ||f|| + |||f|||_gamma`` (Hilbert-Schmidt norm for matrices)."""
    f = GridFunction(grid, _op_norm_path(values))
    return f.sup_norm() + holder_seminorm(f, gamma)


def integral_bound_check(psi, omega, p: FracParams, grid=None, fractions=(1 / 8, 1 / 4, 1 / 2, 1.0),
                       starts=(0.0,), integral: str = "zahle") -> dict:
    """Ratio ``||int psi d omega|| / (||psi||_gamma |||omega|||_beta (T2 - T1)^beta)`` per window."""
    if isinstance(psi, OperatorPath):
        grid, pv = psi.grid, psi.values
    else:
        pv = np.asarray(psi, dtype=float)
    grid, dt = _uniform(grid)
    ov = np.asarray(omega, dtype=float)
    T = grid[-1] - grid[0]
    rows = []
    for frac in fractions:
        L = frac * T
        nL = int(round(L / dt))
        for s0 in starts:
            j0 = int(round(s0 * T / dt))
            if j0 + nL >= grid.size:
                continue
            g = grid[j0:j0 + nL + 1]
            pw, ow = pv[j0:j0 + nL + 1], ov[j0:j0 + nL + 1]
            if integral == "zahle":
                val = zahle_integral(pw, ow, p, grid=g)
            else:
                val = young_sum_integral(pw, ow, grid=g)
            denom = holder_norm(g, pw, p.gamma) * holder_seminorm(GridFunction(g, _op_norm_path(ow)), p.beta) \
                * (g[-1] - g[0]) ** p.beta
            ratio = float(np.linalg.norm(val)) / denom if denom > 0 else 0.0
            rows.append({"length": float(g[-1] - g[0]), "start": float(g[0]), "ratio": ratio})
    ratios = [r["ratio"] for r in rows]
    return {"windows": rows, "max_ratio": max(ratios), "min_ratio": min(ratios),
            "bounded": bool(np.all(np.isfinite(ratios)))}
