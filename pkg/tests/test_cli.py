import json

import numpy as np
import pytest

from fbm_averaging import cli
from fbm_averaging import config as cf
from fbm_averaging.io import read_csv


def _run(tmp_path, *args, cfg=None):
    argv = list(args) + ["--out", str(tmp_path)]
    if cfg is not None:
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg))
        argv += ["--config", str(p)]
    return cli.main(argv)


def test_print_defaults_round_trip(capsys):
    assert cli.main(["--print-defaults"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert cf.from_dict(data) == cf.ExperimentConfig()


def test_unknown_field_rejected():
    with pytest.raises(cf.ConfigError, match="unknown"):
        cf.from_dict({"system": {"bogus": 1}})


def test_invalid_hurst_rejected(tmp_path, capsys):
    assert _run(tmp_path, "validate", cfg={"system": {"H1": 0.4}}) == 2
    assert "1/2 < H1" in capsys.readouterr().err


def test_noncontracting_fast_part_refused(tmp_path, capsys):
    assert _run(tmp_path, "ou", cfg={"system": {"C1": 2.5}}) == 2
    assert "lambda_B > C1" in capsys.readouterr().err


def test_validate_quick_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(a, "validate", "quick", "--seed", "3") == 0
    assert _run(b, "validate", "quick", "--seed", "3") == 0
    assert (a / "validate_quick.json").read_bytes() == (b / "validate_quick.json").read_bytes()


def test_zero_model_validates(tmp_path):
    assert _run(tmp_path, "validate", cfg={"system": {"model": "zero"}}) == 0


def test_integral_identity_gives_increments(tmp_path):
    assert _run(tmp_path, "integral", cfg={"noise": {"fbm_n": 512}}) == 0
    head, rows = read_csv(tmp_path / "integral.csv")
    arr = np.array(rows, dtype=float)
    z = arr[:, 2:6]
    inc = arr[:, 10:14]
    assert np.allclose(z, inc, rtol=1e-3, atol=1e-9)


def test_fbm_sample_outputs(tmp_path):
    assert _run(tmp_path, "fbm-sample", cfg={"noise": {"fbm_n": 1024}}) == 0
    head, rows = read_csv(tmp_path / "fbm_path.csv")
    assert head[0] == "t" and len(rows) == 1025
    _, hol = read_csv(tmp_path / "fbm_holder.csv")
    assert all(abs(float(r[2]) - 0.75) < 0.15 for r in hol)


def test_ou_and_fixed_point_tables(tmp_path):
    cfg = {"experiment": {"seeds": 1, "eps_list": [0.1], "n_points": 2}}
    assert _run(tmp_path, "ou", cfg=cfg) == 0
    head, rows = read_csv(tmp_path / "ou.csv")
    assert head[:3] == ["seed", "eps", "t"] and len(rows) == 2001
    assert _run(tmp_path, "fixed-point", cfg=cfg) == 0
    head, rows = read_csv(tmp_path / "fixed_point.csv")
    assert len(rows) == 2
    assert all(float(r[3]) >= 0.85 * 10.0 for r in rows)


def test_average_drift_table(tmp_path):
    cfg = {"experiment": {"n_points": 2, "M": 200, "T_erg": 50.0}}
    assert _run(tmp_path, "average-drift", cfg=cfg) == 0
    head, rows = read_csv(tmp_path / "average_drift.csv")
    assert len(rows) == 2 and "erg_ci_4" in head


def test_no_command_prints_help(capsys):
    assert cli.main([]) == 2
