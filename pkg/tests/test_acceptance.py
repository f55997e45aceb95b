"""The twelve acceptance criteria at their stated tolerances; each prints one PASS/FAIL line."""
import time

import pytest

from fbm_averaging import cli
from fbm_averaging import validation as va


def _report(capsys, result, t0):
    with capsys.disabled():
        print(f"\n{result.line()}  ({time.perf_counter() - t0:.1f} s)  {va._clean(result.details)}")
    return result


def _check(capsys, fn, *args, **kw):
    t0 = time.perf_counter()
    r = _report(capsys, fn(*args, **kw), t0)
    assert r.passed, r.details


def test_01_young_zahle_oracle(capsys):
    _check(capsys, va.check_young_oracle, range(10), 2048)


def test_02_constant_integrand(capsys):
    _check(capsys, va.check_constant_integrand, range(10))


def test_03_integral_bound_ratio(capsys):
    _check(capsys, va.check_integral_bound, range(20))


def test_04_ou_stationarity_and_flow(capsys):
    _check(capsys, va.check_ou, 10_000)


def test_05_scaling_identities(capsys):
    _check(capsys, va.check_scaling)


def test_06_fixed_point_rate(capsys):
    _check(capsys, va.check_fixed_point_rate, range(10), (0.1, 0.05))


def test_07_lipschitz_in_x(capsys):
    _check(capsys, va.check_lipschitz_in_x, 20, (0.1, 0.05))


def test_08_fbar_audits(capsys):
    _check(capsys, va.check_fbar)


def test_09_khasminskii_scalings(capsys):
    _check(capsys, va.check_khasminskii, range(10))


def test_10_averaging_convergence(capsys):
    _check(capsys, va.check_convergence, range(20))


def test_11_apriori_and_contraction(capsys):
    _check(capsys, va.check_apriori)


def test_12_determinism(capsys, tmp_path):
    t0 = time.perf_counter()
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [cli.main(["validate", "quick", "--seed", "0", "--out", str(d)]) for d in (a, b)]
    same = (a / "validate_quick.json").read_bytes() == (b / "validate_quick.json").read_bytes()
    r = _report(capsys, va.CheckResult("12 Determinism", same and codes == [0, 0],
                                       {"byte_identical": same, "exit_codes": codes}), t0)
    assert r.passed
