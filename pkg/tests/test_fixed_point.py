import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbm_averaging import (FbmPath, FrozenFastSpec, UniformGrid, absorbing_radius, attraction_rate, benchmark_spec,
                           fixed_point_holder_check, fixed_point_scaling_check, lipschitz_in_x, pullback_fixed_point,
                           sample_noise)
from fbm_averaging.fixed_point import conjugation_residual, fixed_point_invariance
from fbm_averaging.solver import _replace

from conftest import X0

LAM = np.array([2.0, 3.0, 4.0, 5.0])


def _zero_path(past=200.0, future=20.0):
    return FbmPath.zeros(UniformGrid.span(-past, future, 1 / 64), 4)


def _linear(a, c, eps=0.1):
    return _replace(benchmark_spec(eps), g=lambda x, y: a * y + c + 0.0 * x, C1=abs(a), C2=abs(c))


@pytest.fixture(scope="module")
def noise():
    return sample_noise(benchmark_spec(0.1), 1.0, 1 / 256, 1 / 256, 20.0, 120.0, 7)


@settings(max_examples=12, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-2, 2))
def test_linear_fixed_point_closed_form(a, c):
    spec = FrozenFastSpec(_linear(a, c), X0)
    y = pullback_fixed_point(spec, _zero_path(), 1e-12).Y_F
    assert np.allclose(y, c / (LAM - a), atol=1e-9)


@pytest.mark.parametrize("a", [-1.0, 0.0, 1.0])
def test_linear_rate(a):
    spec = FrozenFastSpec(_linear(a, 0.0, 0.1), X0)
    e1 = np.array([1.0, 0, 0, 0])
    rate = attraction_rate(spec, _zero_path(20.0), e1, -e1)
    assert rate == pytest.approx((2.0 - a) / 0.1, rel=0.02)


def test_rate_doubles_when_eps_halves(noise):
    bench = benchmark_spec(0.1)
    rng = np.random.default_rng(0)
    y1, y2 = rng.normal(size=(2, 4))
    r = [attraction_rate(FrozenFastSpec(bench.with_eps(e), X0), noise.omega2, y1, y2) for e in (0.1, 0.05)]
    assert r[0] >= 0.85 * (2.0 - bench.C1) / 0.1
    assert r[1] / r[0] == pytest.approx(2.0, rel=0.15)


def test_linear_lipschitz_ratio_per_mode():
    spec = benchmark_spec(0.1)
    w = _zero_path()
    for i, lam in enumerate(LAM):
        dx = np.zeros(4)
        dx[i] = 0.7
        ratio = lipschitz_in_x(spec, w, X0, X0 + dx)
        assert ratio == pytest.approx(0.5 / (lam + 0.25), rel=1e-8)
        assert ratio <= 0.5 / 1.5 + 1e-12


def test_lipschitz_eps_independent(noise):
    bench = benchmark_spec(0.1)
    rng = np.random.default_rng(3)
    bound = bench.C1 / (bench.lambda_B - bench.C1) * 1.1
    for _ in range(5):
        x1, x2 = rng.normal(scale=1.5, size=(2, 4))
        for e in (0.1, 0.05):
            assert lipschitz_in_x(bench, noise.omega2, x1, x2, eps=e) <= bound


def test_fixed_point_inside_absorbing_ball(noise):
    bench = benchmark_spec(0.1)
    radii = {}
    for e in (0.1, 0.05):
        fs = FrozenFastSpec(bench.with_eps(e), X0)
        res = pullback_fixed_point(fs, noise.omega2, 1e-10)
        rad = absorbing_radius(fs, noise.omega2)
        radii[e] = rad["radius"]
        # the ball is centred on the stationary OU part
        assert np.linalg.norm(res.Y_F - res.Z) <= rad["radius"] + rad["tail"]
    assert max(radii.values()) / min(radii.values()) < 2.0


def test_scaling_exact(noise):
    fs = FrozenFastSpec(benchmark_spec(0.25), X0)
    assert fixed_point_scaling_check(fs, noise.omega2, 0.5) < 1e-6


def test_invariance_and_conjugation(noise):
    fs = FrozenFastSpec(benchmark_spec(0.1), X0)
    assert fixed_point_invariance(fs, noise.omega2, [0.25, 0.5]) < 1e-8
    assert conjugation_residual(fs, noise.omega2, 0.0, 1.0, np.ones(4)) < 1e-10


def test_holder_exponent_pure_ou():
    H2 = 0.75
    spec = _replace(benchmark_spec(1.0, 0.75, H2), g=lambda x, y: 0.0 * y, C1=0.0)
    nz = sample_noise(spec, 1.0, 1 / 1024, 1 / 1024, 2.0, 60.0, 1)
    out = fixed_point_holder_check(FrozenFastSpec(spec, X0), nz.omega2, (0.0, 1.0), 0.6)
    assert abs(out["exponent"] - H2) < 0.1
    assert out["spread"] < 1.3


def test_support_too_short_raises():
    fs = FrozenFastSpec(benchmark_spec(0.1), X0)
    with pytest.raises(RuntimeError, match="support"):
        pullback_fixed_point(fs, _zero_path(0.5), 1e-12)


def test_small_gap_warns():
    spec = _replace(benchmark_spec(0.1), C1=1.95)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        FrozenFastSpec(spec, X0)
    assert any(issubclass(r.category, RuntimeWarning) for r in rec)
