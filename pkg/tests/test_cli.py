import csv
import json
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilute_fermi.cli import ConfigError, FitError, SweepConfig, fit_exponent, main, run_sweep
from dilute_fermi.cli import report, sweep

RHO = np.logspace(-4, -2, 9)


# ---------------------------------------------------------------- fits
def test_fit_exact_power_law():
    f = fit_exponent([(r, r**2) for r in RHO], "sq", 2.0)
    assert abs(f.exponent - 2.0) < 1e-6 and f.within(1e-6)


def test_fit_corrected_power_law():
    f = fit_exponent([(r, r ** (7 / 3) * (1 + 0.1 * r ** (1 / 3))) for r in RHO], "c", 7 / 3)
    assert f.within(0.05)


def test_fit_constant_and_negative():
    assert abs(fit_exponent([(r, 3.0) for r in RHO]).exponent) < 1e-6
    f = fit_exponent([(r, -(r**0.5)) for r in RHO])
    assert f.sign == -1 and abs(f.exponent - 0.5) < 1e-9


@pytest.mark.parametrize("pts", [
    [(r, r) for r in RHO[:3]],                                    # too few
    [(r, (-1) ** i * r) for i, r in enumerate(RHO)],              # sign change
    [(r, 0.0 * r) for r in RHO],                                  # zeros
    [(r, r) for r in np.logspace(-3, -2, 6)],                     # one decade only
])
def test_fit_errors(pts):
    with pytest.raises(FitError):
        fit_exponent(pts)


# ---------------------------------------------------------------- config
_floats = st.floats(1e-6, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(_floats, _floats), min_size=1, max_size=5), _floats, st.integers(0, 2**31),
       st.sampled_from(["bump", "softsphere", "zero"]), st.booleans(),
       st.text(st.characters(blacklist_categories=("Cs",)), max_size=12))
def test_config_round_trip(dens, eps, seed, pot, overlap, out):
    c = SweepConfig(densities=dens, eps=eps, seed=seed, potential=pot, allow_image_overlap=overlap,
                    out=out, quantities=["kernel", "hf"])
    back = SweepConfig.from_toml(c.to_toml())
    assert back == c
    assert back.to_toml() == c.to_toml()


def test_config_validation():
    with pytest.raises(ConfigError):
        SweepConfig(densities=[[1e-3, 1e-3]], l_factor=3.9).validate()
    with pytest.raises(ConfigError):
        SweepConfig(densities=[[1e-3, 1e-3]], l_rule="shell").validate()
    SweepConfig(densities=[[1e-3, 1e-3]], l_rule="shell", allow_image_overlap=True).validate()
    with pytest.raises(ConfigError):
        SweepConfig(densities=[[1e-3, 1e-3]], cap=3).validate()
    with pytest.raises(ConfigError):
        SweepConfig(densities=[[1e-3, 1e-3]], quantities=["nope"]).validate()
    with pytest.raises(ConfigError):
        SweepConfig.from_dict({"densities": [[1e-3, 1e-3]], "colour": 1})
    for r in (1e-2, 1e-4):
        c = SweepConfig(densities=[[r / 2, r / 2]])
        assert c.box(r / 2, r / 2) > 4 * r ** (-1 / 3)


# ---------------------------------------------------------------- sweeps
def _hf_cfg(tmp_path, **kw):
    d = dict(densities=[[r / 2, r / 2] for r in np.logspace(-2, -3, 4)], quantities=["hf", "bnorm"],
             l_rule="shell", shell_n2F=1, allow_image_overlap=True, out=str(tmp_path))
    d.update(kw)
    return SweepConfig(**d)


def test_sweep_outputs_validate(tmp_path):
    res = run_sweep(_hf_cfg(tmp_path))
    assert res.ok
    text = res.paths["csv"].read_bytes()
    assert text.count(b"\r\n") == len(res.rows) + 1
    header = text.split(b"\r\n")[0].decode().split(",")
    schema = json.loads(res.paths["csv_schema"].read_text())
    assert header == list(report.CSV_COLUMNS) == schema["required"]
    with open(res.paths["csv"], newline="") as fh:
        for row in csv.DictReader(fh):
            jsonschema.validate(row, schema)
    jsonschema.validate(json.loads(res.paths["fits"].read_text()),
                        json.loads(res.paths["fits_schema"].read_text()))
    assert SweepConfig.load(res.paths["config"]) == _hf_cfg(tmp_path)


def test_sweep_deterministic(tmp_path):
    a = run_sweep(_hf_cfg(tmp_path / "a"))
    b = run_sweep(_hf_cfg(tmp_path / "b", workers=2))
    assert a.paths["csv"].read_bytes() == b.paths["csv"].read_bytes()


def test_zero_potential_sweep(tmp_path):
    cfg = _hf_cfg(tmp_path, potential="zero", quantities=["trial", "bnorm"])
    res = run_sweep(cfg)
    assert res.ok
    corr = [v for q in ("trial.correlation_per_volume", "trial.predicted_per_volume", "bnorm.phi")
            for _, v in res.values(q)]
    assert corr and all(v == 0.0 for v in corr)


def test_failed_rows_reported(tmp_path, monkeypatch, capsys):
    def boom(cfg, a, b, L):
        raise RuntimeError("synthetic failure")

    monkeypatch.setitem(sweep.QUANTITIES, "boom", boom)
    cfg = _hf_cfg(tmp_path, quantities=["hf", "boom"])
    res = run_sweep(cfg)
    assert res.failed == 4 and not res.ok
    assert len(res.values("hf.interaction_ratio")) == 4
    bad = [r for r in res.rows if r["status"] == "error"]
    assert all("synthetic failure" in r["message"] for r in bad)
    path = tmp_path / "boom.toml"
    path.write_text(cfg.to_toml())
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "o"), "--log-level", "INFO"]) == 1
    err = capsys.readouterr().err
    assert "level=error" in err and "row_failed" in err and "run=" in err


# ---------------------------------------------------------------- main
def test_main_exit_codes(tmp_path, capsys):
    assert main(["scatter"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] and math.isclose(out["a"], 0.27121706285359715, rel_tol=1e-10)
    assert main(["kernel", "--rho", "1e-3"]) == 0
    capsys.readouterr()
    assert main(["verify", "--only", "car", "relabel"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["scatter", "--config", str(tmp_path / "missing.toml")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("densities = [[0.001, 0.001]]\nl_factor = 2.0\n")
    assert main(["sweep", "--config", str(bad)]) == 2


def test_trial_json_validates(tmp_path, capsys):
    rc = main(["trial", "--rho-up", "5e-3", "--rho-down", "5e-3", "--out", str(tmp_path), "--log-level", "INFO"])
    assert rc == 0
    err = capsys.readouterr().err
    assert "run=" in err and "module=dilute_fermi.cli" in err
    doc = json.loads((tmp_path / "trial.json").read_text())
    jsonschema.validate(doc, json.loads((tmp_path / "trial.schema.json").read_text()))
    assert doc["correlation"] < 0
