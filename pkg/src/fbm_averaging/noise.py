"""Exact sampling of (trace-class) fractional Brownian motion on uniform grids.

Paths are sampled as cumulative sums of fractional Gaussian noise drawn by
circulant embedding (Davies-Harte).  A two-sided path on ``[-T-, T+]`` is
the cumulative sum over the whole grid re-centred at ``t = 0``; since fBm has
stationary increments this has exactly the two-sided fBm covariance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .io import read_csv, write_csv


@dataclass(frozen=True)
class HurstPair:
    H1: float
    H2: float

    def __post_init__(self):
        if not 0.5 < self.H1 < 1.0:
            raise ValueError(f"H1 must satisfy 1/2 < H1 < 1, got H1={self.H1}")
        if not 1.0 - self.H1 < self.H2 < 1.0:
            raise ValueError(
                f"H2 must satisfy 1 - H1 < H2 < 1 (here {1 - self.H1:g} < H2 < 1), got H2={self.H2}")


@dataclass(frozen=True)
class CovarianceSpectrum:
    q_sq: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q_sq, dtype=float).ravel()
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise ValueError("covariance spectrum must be finite and nonnegative")
        q.setflags(write=False)
        object.__setattr__(self, "q_sq", q)

    @property
    def n(self) -> int:
        return self.q_sq.size

    @property
    def trace(self) -> float:
        return float(self.q_sq.sum())

    @classmethod
    def power_law(cls, n: int, p: float = 2.0) -> "CovarianceSpectrum":
        return cls(1.0 / np.arange(1, n + 1) ** p)


def substream(seed, *keys) -> np.random.SeedSequence:
    """Deterministic child stream of ``seed`` addressed by integer keys."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(keys))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))


def make_rng(seed) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class UniformGrid:
    """Grid ``t_j = (j - i0) * step`` for ``j = 0..size-1`` (always contains 0)."""

    step: float
    i0: int
    size: int

    @classmethod
    def span(cls, t_min: float, t_max: float, step: float) -> "UniformGrid":
        if step <= 0:
            raise ValueError("grid step must be positive")
        if t_min > 0 or t_max < 0:
            raise ValueError("grid must contain t = 0")
        n_minus = _snap(-t_min / step)
        n_plus = _snap(t_max / step)
        return cls(float(step), n_minus, n_minus + n_plus + 1)

    @classmethod
    def from_points(cls, t) -> "UniformGrid":
        t = np.asarray(t, dtype=float)
        if t.size < 2:
            raise ValueError("grid needs at least two points")
        d = np.diff(t)
        step = float(d.mean())
        if step <= 0 or np.max(np.abs(d - step)) > 1e-9 * max(step, 1.0):
            raise ValueError("grid must be uniform and increasing")
        i0 = _snap(-t[0] / step)
        if abs(t[i0]) > 1e-9 * max(step, 1.0):
            raise ValueError("grid must contain t = 0")
        return cls(step, i0, t.size)

    @property
    def points(self) -> np.ndarray:
        return (np.arange(self.size) - self.i0) * self.step

    @property
    def t_min(self) -> float:
        return -self.i0 * self.step

    @property
    def t_max(self) -> float:
        return (self.size - 1 - self.i0) * self.step


def _snap(k: float, tol: float = 1e-7) -> int:
    r = int(round(k))
    if abs(k - r) > tol * max(1.0, abs(k)):
        raise ValueError(f"time is not aligned with the grid (offset {k - r:g} steps)")
    return r


@dataclass(frozen=True)
class FbmPath:
    """Sampled multi-mode path; ``values[j, i]`` is mode ``i`` at ``t_j``."""

    step: float
    i0: int
    values: np.ndarray
    hurst: float
    seed: object = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        if not 0 <= self.i0 < v.shape[0]:
            raise ValueError("t = 0 must lie on the grid")
        object.__setattr__(self, "values", v)

    @property
    def grid(self) -> np.ndarray:
        return (np.arange(self.values.shape[0]) - self.i0) * self.step

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    @property
    def t_min(self) -> float:
        return -self.i0 * self.step

    @property
    def t_max(self) -> float:
        return (self.values.shape[0] - 1 - self.i0) * self.step

    def index(self, t: float) -> int:
        j = self.i0 + _snap(t / self.step)
        if not 0 <= j < self.values.shape[0]:
            raise ValueError(f"time {t} outside sampled support [{self.t_min}, {self.t_max}]")
        return j

    def at(self, t: float) -> np.ndarray:
        return self.values[self.index(t)]

    def window(self, t0: float, t1: float) -> tuple[np.ndarray, np.ndarray]:
        """Grid points and values on ``[t0, t1]`` (both grid aligned)."""
        j0, j1 = self.index(t0), self.index(t1)
        return self.grid[j0:j1 + 1], self.values[j0:j1 + 1]

    @classmethod
    def zeros(cls, grid: UniformGrid, n_modes: int, hurst: float = 0.5) -> "FbmPath":
        return cls(grid.step, grid.i0, np.zeros((grid.size, n_modes)), hurst)

    @classmethod
    def from_function(cls, grid: UniformGrid, fn, hurst: float = 1.0) -> "FbmPath":
        """Deterministic test path ``fn(t)`` re-centred so that it vanishes at 0."""
        t = grid.points
        v = np.asarray(fn(t), dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        return cls(grid.step, grid.i0, v - v[grid.i0], hurst)


def fgn_autocov(H: float, n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    return 0.5 * ((k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def _circulant_eigs(H: float, n: int):
    g = fgn_autocov(H, n)
    c = np.concatenate([g[:n + 1], g[n - 1:0:-1]])
    return np.fft.fft(c).real


def sample_fgn(H: float, n: int, rng: np.random.Generator, size=None, method: str = "auto") -> np.ndarray:
    """``n`` unit-step fractional Gaussian noise values (unit variance).

    ``method`` is ``"auto"`` (circulant embedding, Cholesky if the embedding
    is not nonnegative definite), ``"davies-harte"`` or ``"cholesky"``.
    """
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    if n == 0:
        return np.zeros(shape + (0,))
    if method in ("auto", "davies-harte"):
        eig = _circulant_eigs(H, n)
        if eig.min() >= -1e-10 * eig.max():
            eig = np.clip(eig, 0.0, None)
            m = 2 * n
            z = rng.standard_normal(shape + (m,)) + 1j * rng.standard_normal(shape + (m,))
            w = np.fft.fft(np.sqrt(eig / m) * z, axis=-1)
            return w.real[..., :n]
        if method == "davies-harte":
            raise ValueError("circulant embedding is not nonnegative definite")
    g = fgn_autocov(H, n)[:n]
    L = np.linalg.cholesky(scipy.linalg.toeplitz(g))
    z = rng.standard_normal(shape + (n,))
    return z @ L.T


def _as_grid(grid) -> UniformGrid:
    return grid if isinstance(grid, UniformGrid) else UniformGrid.from_points(grid)


def sample_fbm_1d(H: float, grid, seed, size=None, paper_covariance: bool = False,
                  method: str = "auto") -> np.ndarray:
    """Scalar fBm on a uniform grid containing 0, ``B(0) = 0`` exactly.

    Default normalization gives ``Var B(t) = |t|^{2H}``; ``paper_covariance``
    doubles the covariance.  Returns shape ``(grid.size,)`` or
    ``(size, grid.size)``.
    """
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst index must lie in (0, 1), got {H}")
    g = _as_grid(grid)
    rng = make_rng(seed)
    inc = sample_fgn(H, g.size - 1, rng, size=size, method=method) * g.step ** H
    if paper_covariance:
        inc = inc * np.sqrt(2.0)
    path = np.zeros(inc.shape[:-1] + (g.size,))
    np.cumsum(inc, axis=-1, out=path[..., 1:])
    path -= path[..., g.i0:g.i0 + 1]
    path[..., g.i0] = 0.0
    return path


def sample_trace_class_fbm(Q: CovarianceSpectrum, H: float, grid, seed, size=None,
                           paper_covariance: bool = False) -> FbmPath | np.ndarray:
    """Mode ``i`` is ``sqrt(q_i^2)`` times an independent standard fBm.

    Mode ``i`` draws from ``substream(seed, i)``.  With ``size`` given the
    raw array of shape ``(size, grid.size, N)`` is returned instead of a path.
    """
    g = _as_grid(grid)
    q = np.sqrt(Q.q_sq)
    cols = []
    for i in range(Q.n):
        b = sample_fbm_1d(H, g, substream(seed, i), size=size, paper_covariance=paper_covariance)
        cols.append(q[i] * b)
    arr = np.stack(cols, axis=-1)
    if size is not None:
        return arr
    return FbmPath(g.step, g.i0, arr, H, seed)


def shift(path: FbmPath, t: float, window=None) -> FbmPath:
    """``(theta_t w)(s) = w(s + t) - w(t)`` on the full shifted support."""
    j = path.index(t)
    out = FbmPath(path.step, j, path.values - path.values[j], path.hurst, path.seed)
    if window is not None:
        s0, s1 = window
        if s0 < out.t_min - 1e-12 or s1 > out.t_max + 1e-12:
            raise ValueError("shifted window exceeds the sampled support")
        j0, j1 = out.index(s0), out.index(s1)
        out = FbmPath(path.step, out.i0 - j0, out.values[j0:j1 + 1], path.hurst, path.seed)
    return out


def scale_time(path: FbmPath, eps: float, window=None) -> FbmPath:
    """``w_eps(t) = w(t / eps)``: the same samples on a grid with step ``eps * step``."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    out = FbmPath(path.step * eps, path.i0, path.values, path.hurst, path.seed)
    if window is not None:
        t0, t1 = window
        if t0 < out.t_min - 1e-12 or t1 > out.t_max + 1e-12:
            raise ValueError("scaled window exceeds the sampled support")
        j0, j1 = out.index(t0), out.index(t1)
        out = FbmPath(out.step, out.i0 - j0, out.values[j0:j1 + 1], path.hurst, path.seed)
    return out


def estimate_holder_exponent(path, values=None, max_lag_frac: float = 1 / 16) -> float:
    """Log-log slope of the second-order structure function over dyadic lags, halved."""
    if isinstance(path, FbmPath):
        grid, v = path.grid, path.values
    else:
        grid = np.asarray(path, dtype=float)
        v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    n = v.shape[0]
    if n < 256:
        raise ValueError("Hölder exponent estimate needs at least 256 grid points")
    step = grid[1] - grid[0]
    lags = 2 ** np.arange(0, int(np.log2(n * max_lag_frac)) + 1)
    s2 = np.array([np.mean(np.sum((v[k:] - v[:-k]) ** 2, axis=1)) for k in lags])
    if np.any(s2 <= 0):
        return float("nan")
    slope = np.polyfit(np.log(lags * step), np.log(s2), 1)[0]
    return float(slope / 2)


def write_path_csv(path: FbmPath, file):
    header = ["t"] + [f"mode_{i + 1}" for i in range(path.n_modes)]
    rows = (np.concatenate([[t], row]) for t, row in zip(path.grid, path.values))
    return write_csv(file, header, rows)


def read_path_csv(file, hurst: float, seed=None) -> FbmPath:
    header, rows = read_csv(file)
    arr = np.array([[float(x) for x in r] for r in rows])
    g = UniformGrid.from_points(arr[:, 0])
    return FbmPath(g.step, g.i0, arr[:, 1:], hurst, seed)
