import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbm_averaging import (CovarianceSpectrum, DiagonalOperator, HurstPair, KhasConfig, LatticeDrift, SystemSpec,
                           average_drift_ergodic, average_drift_mc, benchmark_spec, fbar_lipschitz_audit,
                           gaussian_fbar, khasminskii_aux, sample_noise)
from fbm_averaging.averaging import AveragedDrift, choose_delta, epsilon_delta_guard, y1_y2_block_integrals

from conftest import X0


def _scalar_sq(lam=2.0):
    return SystemSpec(A=DiagonalOperator([1.0]), B=DiagonalOperator([lam]), f=lambda x, y: y ** 2,
                      g=lambda x, y: 0.0 * y, h=lambda x: 0.0 * x, eps=0.1, C1=0.0, C2=0.0,
                      hurst=HurstPair(0.75, 0.5), Q1=CovarianceSpectrum([1.0]), Q2=CovarianceSpectrum([1.0]))


def test_ou_variance_oracle():
    spec = _scalar_sq(2.0)
    m, ci = average_drift_mc(spec, [[0.0]], M=4000, seed=1, h=0.005)
    assert abs(m[0, 0] - 0.25) <= ci[0, 0]


def test_gaussian_fbar_matches_mc():
    spec = benchmark_spec(0.1)
    x = np.array([X0, -X0])
    exact = gaussian_fbar(spec, x, 0.5, 0.25)
    m, ci = average_drift_mc(spec, x, M=2000, seed=2)
    assert np.all(np.abs(m - exact) <= ci)


def test_mc_and_ergodic_agree():
    spec = benchmark_spec(0.1)
    x = np.array([X0, [0.0, 0.0, 0.0, 0.0]])
    m, ci_m = average_drift_mc(spec, x, M=500, seed=3)
    g, ci_g = average_drift_ergodic(spec, x, T_erg=100.0, seed=4, chains=4)
    assert np.all(np.abs(m - g) <= np.sqrt(ci_m ** 2 + ci_g ** 2))


def test_fbar_is_lipschitz_with_bound():
    spec = benchmark_spec(0.1)
    rng = np.random.default_rng(0)
    pairs = rng.normal(size=(8, 2, 4))
    fb = lambda x: gaussian_fbar(spec, x, 0.5, 0.25, 30)
    out = fbar_lipschitz_audit(fb, pairs)
    assert out["max_ratio"] <= spec.c_prime * 1.1


@pytest.fixture(scope="module")
def lattice():
    return LatticeDrift(benchmark_spec(0.1), spacing=0.1, chains=16, T_erg=20.0, seed=5)


def test_lattice_exact_at_nodes_and_deterministic(lattice):
    node = np.array([0.1, -0.2, 0.3, 0.0])
    v1 = lattice(node)
    key = tuple(int(round(k)) for k in node / 0.1)
    assert np.allclose(v1, lattice.cache[key])
    assert np.array_equal(lattice(node), v1)


def test_lattice_close_to_exact(lattice):
    spec = benchmark_spec(0.1)
    x = np.array([0.13, -0.27, 0.31, 0.05])
    exact = gaussian_fbar(spec, x[None], 0.5, 0.25)[0]
    # interpolation error is second order in the spacing plus the estimator error
    assert np.max(np.abs(lattice(x) - exact)) < 0.02 + lattice.max_ci()


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-0.3, 0.3), min_size=4, max_size=4))
def test_lattice_bounded_by_f(lattice, x):
    # |fbar| <= sup |f| = 0.5 per component
    assert np.all(np.abs(lattice(np.array(x))) <= 0.5)


def test_antithetic_reduces_spread():
    spec = benchmark_spec(0.1)
    x = np.array([0.3, 0.1, -0.2, 0.0])
    exact = gaussian_fbar(spec, x[None], 0.5, 0.25)[0]
    err = {}
    for anti in (False, True):
        e = [np.abs(LatticeDrift(spec, 0.1, 8, 10.0, seed=s, antithetic=anti)(x) - exact).max() for s in range(6)]
        err[anti] = np.sqrt(np.mean(np.square(e)))
    assert err[True] < err[False]


def test_averaged_drift_mode():
    with pytest.raises(ValueError):
        AveragedDrift(lambda x: x, "bogus", 1)


def test_khas_config():
    assert KhasConfig(0.1, 0.0005).block == 200
    with pytest.raises(ValueError):
        KhasConfig(0.1, 0.0003)
    with pytest.raises(ValueError):
        KhasConfig(1.5)


def test_unit_block_reproduces_solution():
    spec = benchmark_spec(0.1)
    dt = 1 / 512
    noise = sample_noise(spec, 1.0, dt, dt / 0.1, 11.0, None, 0)
    sol, Xh, Yh = khasminskii_aux(spec, noise, X0, np.zeros(4), 1.0, KhasConfig(dt, dt))
    assert np.allclose(Xh, sol.X, atol=1e-13) and np.allclose(Yh, sol.Y, atol=1e-13)


def test_block_integrals_shrink_with_eps():
    base = benchmark_spec(0.1)
    dt = 0.0005
    I = []
    for e in (0.1, 0.05):
        spec = base.with_eps(e)
        noise = sample_noise(spec, 1.0, dt, dt / 0.1, 21.0, 60.0, 1)
        I.append(y1_y2_block_integrals(spec, noise, X0, np.zeros(4), 1.0, KhasConfig(0.25, dt)).mean())
    assert 1.4 < I[0] / I[1] < 2.6


def test_guard_and_choose_delta():
    spec = benchmark_spec(0.02)
    d = choose_delta(spec, X0, np.zeros(4), 0.55, 1.0, 0.0005, 1.0)
    ok, lhs = epsilon_delta_guard(spec, X0, np.zeros(4), d, 0.55, 1.0)
    assert ok and lhs <= d ** 1.55
    assert not epsilon_delta_guard(spec, X0, np.zeros(4), d - 0.0005, 0.55, 1.0)[0]
