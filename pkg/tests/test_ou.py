import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.integrate import solve_ivp, trapezoid

from fbm_averaging import CovarianceSpectrum, DiagonalOperator, FbmPath, OuSpec, UniformGrid, ou_evolve
from fbm_averaging.noise import sample_trace_class_fbm, substream
from fbm_averaging.ou import (exp_coefficients, fou_stationary_variance, ou_flow_check, ou_mild, ou_recursion,
                              ou_stationary_batch, scaling_identity_check, stationary_ou_path, sublinearity_check)
from fbm_averaging.solver import sample_noise

LAM = np.array([2.0, 3.0, 4.0, 5.0])


def _spec(eps=1.0, H=0.5):
    return OuSpec(DiagonalOperator(LAM), CovarianceSpectrum.power_law(4), eps, H)


def test_constant_path_matches_ode():
    # a path that jumps by c in the first cell and then stays flat: afterwards Z' = -lambda Z
    c = np.array([1.0, -2.0, 0.5, 3.0])
    g = np.linspace(0, 1, 4097)
    w = np.vstack([np.zeros(4), np.tile(c, (g.size - 1, 1))])
    z = ou_recursion(LAM, g[1], np.diff(w, axis=0))
    ode = solve_ivp(lambda t, y: -LAM * y, (g[1], 1.0), z[1], rtol=1e-12, atol=1e-14, t_eval=[1.0])
    assert np.allclose(z[-1], ode.y[:, -1], rtol=1e-10)


def test_mild_form_literal_start():
    g = np.linspace(0, 1, 65)
    w = np.outer(g, np.ones(4)) + 0.3
    z = ou_mild(LAM, g, w, np.zeros(4))
    assert np.allclose(z[0], 0.3)


def test_integration_by_parts_identity():
    # lam int_0^t e^{-lam (t-r)} c dr = c - e^{-lam t} c
    t = 0.7
    r = np.linspace(0, t, 20001)
    lhs = trapezoid(LAM[:, None] * np.exp(-LAM[:, None] * (t - r)) * 1.5, r, axis=1)
    assert np.allclose(lhs, 1.5 - np.exp(-LAM * t) * 1.5, rtol=1e-7)
    # the one-step gain is the same integral over a cell, divided by its length
    a, c = exp_coefficients(LAM, t)
    assert np.allclose(c * LAM * t, 1.0 - a)


def test_scalar_stationary_variance():
    spec = OuSpec(DiagonalOperator([1.0]), CovarianceSpectrum([1.0]), 1.0, 0.5)
    h = 0.05
    k = int(round(spec.default_past() / h))
    g = UniformGrid.span(-k * h, 0.0, h)
    paths = sample_trace_class_fbm(spec.Q, 0.5, g, substream(0, 11), size=10_000)
    z = ou_stationary_batch(spec, paths, h, k, k)[:, 0]
    target = fou_stationary_variance(1.0, 1.0, 0.5)
    assert target == pytest.approx(0.5)
    assert abs(z.var(ddof=1) - target) < 3 * target * np.sqrt(2 / 9_999)


def test_stationary_across_times():
    spec = OuSpec(DiagonalOperator([1.0]), CovarianceSpectrum([1.0]), 1.0, 0.7)
    h = 0.05
    k = int(round(30 / h))
    g = UniformGrid.span(-k * h, 10.0, h)
    paths = sample_trace_class_fbm(spec.Q, 0.7, g, 3, size=4000)
    samples = [ou_stationary_batch(spec, paths, h, k + int(round(t / h)), k)[:, 0] for t in (0, 5, 10)]
    assert stats.ks_2samp(samples[0], samples[1]).pvalue > 0.01
    assert stats.ks_2samp(samples[0], samples[2]).pvalue > 0.01


def test_flow_residual_and_past_refinement():
    noise = sample_noise(_spec_sys(), 1.0, 1 / 512, 1 / 512, 30.0, 30.0, 1)
    sp = _spec(0.1)
    res = [ou_flow_check(sp, noise.omega2, 0.0, 0.5, past=p * 0.1 / 2.0) for p in (5, 10, 20)]
    assert res[-1] < 1e-3
    assert res[0] > res[1] > res[2]


def _spec_sys():
    from fbm_averaging import benchmark_spec
    return benchmark_spec(0.1)


def test_scaling_identity_exact():
    noise = sample_noise(_spec_sys(), 1.0, 1 / 256, 1 / 256, 20.0, 60.0, 2)
    assert scaling_identity_check(_spec(0.25), noise.omega2, 0.5) < 1e-6


def test_sublinearity():
    g = UniformGrid.span(-30.0, 50.0, 1 / 64)
    paths = [sample_trace_class_fbm(CovarianceSpectrum.power_law(4), 0.5, g, s) for s in range(8)]
    out = sublinearity_check(_spec(), paths, 1.0)
    assert np.all(np.isfinite(out["m"]))
    assert out["median"][-1] < out["median"][0]


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-3, 3))
def test_evolve_zero_noise_decays(t, z0):
    g = UniformGrid.span(0.0, 5.0, 1 / 64)
    w = FbmPath.zeros(g, 4)
    t = round(t * 64) / 64
    _, z = ou_evolve(_spec(), np.full(4, z0), w, (0.0, t))
    assert np.allclose(z[-1], z0 * np.exp(-LAM * t), atol=1e-12)


def test_stationary_path_needs_support():
    g = UniformGrid.span(-1.0, 1.0, 1 / 64)
    w = FbmPath.zeros(g, 4)
    with pytest.raises(ValueError, match="past horizon"):
        stationary_ou_path(_spec(), w, 0.0, 1.0, past=5.0)
