import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fbm_averaging import DiagonalOperator, GridFunction, HolderParams, holder_seminorm, weighted_holder_norm
from fbm_averaging.noise import UniformGrid, sample_fbm_1d
from fbm_averaging.spectral import semigroup_apply


def test_operator_rejects_bad_spectrum():
    with pytest.raises(ValueError):
        DiagonalOperator([1.0, -2.0])
    with pytest.raises(ValueError):
        DiagonalOperator([2.0, 1.0])


@given(st.lists(st.floats(0.1, 10.0), min_size=1, max_size=6), st.floats(0, 3), st.floats(0, 3))
def test_semigroup_property(lams, s, t):
    op = DiagonalOperator(sorted(lams))
    v = np.ones(op.n)
    a = semigroup_apply(op, s + t, v)
    b = semigroup_apply(op, s, semigroup_apply(op, t, v))
    assert np.allclose(a, b, rtol=1e-12, atol=1e-300)


def test_semigroup_negative_time():
    with pytest.raises(ValueError):
        semigroup_apply(DiagonalOperator([1.0]), -0.1, [1.0])


def test_linear_function_seminorm():
    t = np.linspace(0, 1, 65)
    f = GridFunction(t, 3 * t)
    # slope 3, gamma = 1 gives exactly 3; smaller gamma is maximised on the longest lag
    assert holder_seminorm(f, 0.999999) == pytest.approx(3.0, rel=1e-4)
    assert holder_seminorm(f, 0.5) == pytest.approx(3.0, rel=1e-12)


def test_weighted_norm_monotone_in_rho():
    g = UniformGrid.span(0.0, 1.0, 1 / 512)
    f = GridFunction(g.points, sample_fbm_1d(0.75, g, 3))
    vals = [weighted_holder_norm(f, HolderParams(0.7, rho)) for rho in (0.0, 1.0, 10.0)]
    assert vals[0] >= vals[1] >= vals[2]


@settings(max_examples=30, deadline=None)
@given(arrays(float, 20, elements=st.floats(-5, 5)), st.floats(-3, 3), st.floats(0.1, 0.95))
def test_seminorm_shift_invariant_and_homogeneous(v, c, gamma):
    t = np.linspace(0, 1, 20)
    a = holder_seminorm(GridFunction(t, v), gamma)
    assert holder_seminorm(GridFunction(t, v + 7.0), gamma) == pytest.approx(a, rel=1e-9, abs=1e-9)
    assert holder_seminorm(GridFunction(t, c * v), gamma) == pytest.approx(abs(c) * a, rel=1e-9, abs=1e-9)


def test_holder_params_validate():
    with pytest.raises(ValueError):
        HolderParams(1.2)
    with pytest.raises(ValueError):
        HolderParams(0.5, rho=-1)


def test_seminorm_stable_under_refinement():
    # finite and within 20% across dyadic grids for a fixed path
    g = UniformGrid.span(0.0, 1.0, 1 / 4096)
    w = sample_fbm_1d(0.75, g, 11)
    vals = [holder_seminorm(GridFunction(g.points[::k], w[::k]), 0.7) for k in (4, 2, 1)]
    assert np.all(np.isfinite(vals))
    assert max(vals) / min(vals) < 1.2 ** 2
