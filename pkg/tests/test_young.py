from math import gamma as Gamma

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbm_averaging import FracParams, OperatorPath, young_sum_integral, zahle_integral
from fbm_averaging.noise import CovarianceSpectrum, UniformGrid, sample_trace_class_fbm
from fbm_averaging.validation import random_integrand
from fbm_averaging.young import integral_bound_check, trapezoid_stieltjes, weyl_left_derivative, \
    weyl_right_derivative

G = np.linspace(0.0, 1.0, 257)


def _fbm(seed, n=2048, H=0.75, modes=3):
    g = UniformGrid.span(0.0, 1.0, 1 / n)
    return g.points, sample_trace_class_fbm(CovarianceSpectrum(np.ones(modes)), H, g, seed).values


def test_frac_params_constraints():
    FracParams.midpoint(0.7, 0.45)
    with pytest.raises(ValueError):
        FracParams(0.5, 0.4, 0.6)      # beta <= 1/2
    with pytest.raises(ValueError):
        FracParams(0.5, 0.7, 0.45)     # alpha >= gamma


def test_left_derivative_linear_closed_form():
    a = 0.5
    got = weyl_left_derivative(G, a, 0.0, 1.0, grid=G)
    assert got == pytest.approx(1.0 / Gamma(2 - a), rel=1e-12)


def test_right_derivative_linear_closed_form():
    a = 0.3
    for r in (0.0, 0.25, 0.5):
        got = weyl_right_derivative(G, a, 1.0, r, grid=G)
        assert got == pytest.approx((1 - r) ** a / Gamma(1 + a), rel=1e-12)


def test_left_derivative_small_alpha_limit():
    psi = np.sin(3 * G) + 1.0
    got = weyl_left_derivative(psi, 1e-3, 0.0, 0.7, grid=G)
    assert abs(got - (np.sin(2.1) + 1.0)) / (np.sin(2.1) + 1.0) < 1e-2


def test_constant_integrand_gives_increment():
    g, w = _fbm(1)
    z = zahle_integral(OperatorPath(g, np.broadcast_to(np.eye(3), (g.size, 3, 3))), w)
    assert np.allclose(z, w[-1] - w[0], rtol=1e-3)


def test_smooth_paths_match_exact_integral():
    # psi = cos t, omega = t^2 : int_0^1 cos(t) 2t dt
    g = np.linspace(0.0, 1.0, 1025)
    exact = 2 * (np.cos(1.0) + np.sin(1.0) - 1.0)
    z = zahle_integral(OperatorPath(g, np.cos(g)), (g ** 2)[:, None], 0.4)
    assert float(np.squeeze(z)) == pytest.approx(exact, rel=1e-4)
    assert float(np.squeeze(trapezoid_stieltjes(np.cos(g), g ** 2))) == pytest.approx(exact, rel=1e-5)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_zahle_matches_riemann_stieltjes(seed):
    rng = np.random.default_rng(seed)
    g, w = _fbm(seed)
    psi = random_integrand(rng, g)
    gaps = []
    for k in (2, 1):
        z = zahle_integral(OperatorPath(g[::k], psi[::k]), w[::k])
        y = young_sum_integral(OperatorPath(g[::k], psi[::k]), w[::k])
        gaps.append(np.linalg.norm(z - y) / np.linalg.norm(y))
    assert gaps[1] < 1e-2 and gaps[1] < gaps[0]


def test_dyadic_refinement_cauchy():
    g, w = _fbm(4, n=4096)
    rng = np.random.default_rng(4)
    psi = random_integrand(rng, g)
    I = [zahle_integral(OperatorPath(g[::k], psi[::k]), w[::k]) for k in (16, 8, 4, 2, 1)]
    d = [np.linalg.norm(I[i + 1] - I[i]) for i in range(4)]
    assert all(d[i + 1] < d[i] for i in range(3))


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 50))
def test_integral_is_bilinear(a, b, seed):
    g, w = _fbm(seed, n=256, modes=1)
    p1, p2 = np.cos(g), g ** 2
    lhs = zahle_integral(OperatorPath(g, a * p1 + b * p2), w)
    rhs = a * zahle_integral(OperatorPath(g, p1), w) + b * zahle_integral(OperatorPath(g, p2), w)
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + abs(a) + abs(b)))


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 7), st.integers(0, 30))
def test_window_additivity(k, seed):
    g, w = _fbm(seed, n=256, modes=2)
    psi = np.stack([np.cos(g), np.sin(g)], axis=1)
    m = g[32 * k]
    full = zahle_integral(OperatorPath(g, psi), w, window=(0.0, 1.0))
    parts = zahle_integral(OperatorPath(g, psi), w, window=(0.0, m)) + \
        zahle_integral(OperatorPath(g, psi), w, window=(m, 1.0))
    assert np.allclose(full, parts, rtol=2e-2, atol=1e-3)


def test_bound_ratio_finite_for_smooth_paths():
    g = np.linspace(0, 1, 513)
    psi = np.cos(g)[:, None]
    w = np.sin(2 * g)[:, None]
    r = integral_bound_check(psi, w, FracParams.midpoint(0.7, 0.45), g)["max_ratio"]
    assert np.isfinite(r) and r < 10


def test_mismatched_grids_rejected():
    with pytest.raises(ValueError):
        zahle_integral(OperatorPath(G, np.ones(G.size)), np.ones((G.size - 1, 1)))
