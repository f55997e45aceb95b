import numpy as np
import pytest

from fbm_averaging import (CovarianceSpectrum, DiagonalOperator, HurstPair, OuSpec, SolverConfig, SystemSpec,
                           benchmark_spec, ou_evolve, picard_solve, sample_noise, solve_averaged, solve_coupled)
from fbm_averaging.solver import (_replace, apriori_bounds_check, appendix_inequalities_check, audit_coefficients,
                                  contraction_diagnostics, fast_stationary, operator_T_apply, slow_increments,
                                  zero_spec)

from conftest import X0


def _scalar(a=0.1, lam=1.0):
    return SystemSpec(A=DiagonalOperator([lam]), B=DiagonalOperator([2.0]), f=lambda x, y: a * x,
                      g=lambda x, y: 0.0 * y, h=lambda x: 0.0 * x, eps=0.1, C1=a, C2=0.0,
                      hurst=HurstPair(0.75, 0.5), Q1=CovarianceSpectrum([1.0]), Q2=CovarianceSpectrum([0.0]))


def test_spec_requires_contracting_fast_part(bench):
    with pytest.raises(ValueError, match="lambda_B > C1"):
        _replace(bench, C1=3.0)


def test_benchmark_coefficient_audit(bench):
    assert audit_coefficients(bench)["ok"]


def test_identity_noise_matches_ou(bench):
    spec = _replace(bench, f=lambda x, y: 0.0 * x, h=lambda x: np.ones_like(np.asarray(x, float)))
    noise = sample_noise(spec, 1.0, 1 / 512, 1 / 512, 10.0, None, 3)
    sol = solve_coupled(spec, noise, X0, np.zeros(4), 1.0, 1 / 512)
    ou = OuSpec(spec.A, spec.Q1, 1.0, 0.75)
    _, z = ou_evolve(ou, X0, noise.omega1, (0.0, 1.0))
    assert np.max(np.abs(sol.X - z)) < 1e-6


def test_zero_system_is_semigroup():
    spec = zero_spec(4, 0.1)
    noise = sample_noise(spec, 1.0, 1 / 256, 1 / 256, 10.0, None, 0)
    sol = solve_coupled(spec, noise, X0, np.ones(4), 1.0, 1 / 256)
    assert np.allclose(sol.X, np.exp(-np.outer(sol.t, spec.A.eigenvalues)) * X0, atol=1e-13)
    assert np.allclose(sol.Y, np.exp(-np.outer(sol.t, spec.B.eigenvalues / 0.1)), atol=1e-13)


def test_dt_refinement_cauchy(bench):
    noise = sample_noise(bench, 1.0, 1 / 4096, 1 / 4096, 10.0, None, 1)
    X = {}
    for n in (512, 1024, 2048, 4096):
        X[n] = solve_coupled(bench, noise, X0, np.zeros(4), 1.0, 1 / n).X
    d = [np.max(np.abs(X[2 * n][::2] - X[n])) for n in (512, 1024, 2048)]
    assert d[1] < d[0] and d[2] < d[1]


def test_picard_linear_scalar():
    spec = _scalar()
    t = np.linspace(0, 1, 1025)
    w1 = np.zeros((t.size, 1))
    Z = np.zeros((t.size, 1))
    sol = picard_solve(spec, t, w1, Z, [1.0], [0.0], SolverConfig(picard_tol=1e-12))
    exact = np.exp((-1.0 + 0.1) * t)
    assert np.max(np.abs(sol.X[:, 0] - exact) / exact) < 1e-4


def test_picard_agrees_with_stepping(bench):
    dt = 1 / 1024
    noise = sample_noise(bench, 1.0, dt, dt / bench.eps, 12.0, None, 2)
    sol = solve_coupled(bench, noise, X0, np.zeros(4), 1.0, dt)
    t = sol.t
    pic = picard_solve(bench, t, slow_increments(noise.omega1, dt, t.size - 1), sol.Z, X0, np.zeros(4),
                       SolverConfig(picard_tol=1e-9))
    TX, TY = operator_T_apply(bench, t, pic.X, pic.Y, slow_increments(noise.omega1, dt, t.size - 1), sol.Z, X0,
                              np.zeros(4))
    assert np.max(np.abs(TX - pic.X)) < 1e-8
    assert np.max(np.abs(pic.X - sol.X)) < 5e-3


def test_contraction_improves_with_rho(bench):
    dt = 1 / 256
    noise = sample_noise(bench, 1.0, dt, dt / bench.eps, 12.0, None, 0)
    t = np.arange(257) * dt
    Z = fast_stationary(bench, noise.omega2, dt, 256)
    d = contraction_diagnostics(bench, t, slow_increments(noise.omega1, dt, 256), Z, X0, np.zeros(4))
    assert d["C_decreasing"] and d["contraction_decreasing"]


def test_apriori_bounds(bench):
    out = apriori_bounds_check(bench, seeds=[0], eps_list=(0.2, 0.02), dt=0.001)
    assert out["x_ok"] and out["y_decreasing"]


def test_appendix_inequalities():
    out = appendix_inequalities_check()
    assert out["K_decreasing"] and out["inq_rho_bounded"]
    assert out["K"][-1] < out["K"][0]


def test_averaged_with_exact_drift_is_deterministic(bench):
    noise = sample_noise(bench, 1.0, 1 / 256, 1 / 256, 1.0, 1.0, 5)
    a = solve_averaged(bench, lambda x: 0.1 * x, noise.omega1, X0, 1.0, 1 / 256)
    b = solve_averaged(bench, lambda x: 0.1 * x, noise.omega1, X0, 1.0, 1 / 256)
    assert np.array_equal(a.X, b.X)


def test_T_not_multiple_of_dt(bench):
    noise = sample_noise(bench, 1.0, 1 / 256, 1 / 256, 12.0, None, 0)
    with pytest.raises(ValueError):
        solve_coupled(bench, noise, X0, np.zeros(4), 0.3, 1 / 256)
