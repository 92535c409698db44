import csv
import io
import json
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from decayscales import cli
from decayscales.errors import SpecError

POWER = {
    "model": "power-a2",
    "observable": "InvA",
    "regime": {"regime": "InfHilbertPoly", "alpha": 2},
    "grids": {"t_range": [1e2, 1e8], "points_per_decade": 4},
    "tolerances": {"slope": 0.05, "slope_expected": -0.5, "band": 20},
}


def _write(tmp_path, spec, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(spec))
    return str(p)


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_conjugate_csv(capsys):
    code, out, _ = _run(capsys, "conjugate", "--expr", "const(2)")
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and all(float(r["conjugate"]) == pytest.approx(0.5) for r in rows)


def test_conjugate_json_and_closed_form(capsys):
    code, out, _ = _run(capsys, "conjugate", "--expr", "logpow(1)", "--format", "json")
    body = json.loads(out)
    assert code == cli.EXIT_OK and body["passed"] and body["closed_form"]
    assert body["identity_error"] <= 1e-9


def test_conjugate_bad_input(capsys):
    assert _run(capsys, "conjugate", "--expr", "logpow(")[0] == cli.EXIT_INPUT
    assert _run(capsys, "conjugate")[0] == cli.EXIT_INPUT
    assert _run(capsys, "nonsense")[0] == cli.EXIT_INPUT


def test_verify_pass_and_outputs(tmp_path, capsys):
    spec = dict(POWER, outputs={"csv": str(tmp_path / "r.csv"), "json": str(tmp_path / "r.json")})
    code, out, err = _run(capsys, "verify", "--spec", _write(tmp_path, spec))
    assert code == cli.EXIT_OK, err
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["pass"] and abs(report["slope_fit"] + 0.5) <= 0.05
    assert report["config"]["model"]["name"] == "power"
    head = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert head == "t,measured,predicted_lower,predicted_upper,ratio"
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".tmp-")]


def test_verify_failure_exit(tmp_path, capsys):
    spec = dict(POWER, tolerances={"slope_expected": -1.0, "slope": 0.01})
    assert _run(capsys, "verify", "--spec", _write(tmp_path, spec), "--quiet")[0] == cli.EXIT_FAIL


def test_verify_formula_envelope(tmp_path, capsys):
    spec = {"model": {"variant": "preset", "name": "log-growth"}, "observable": "InvA",
            "regime": {"formula": "exp(-2*sqrt(t))"}, "grids": {"t_range": [4, 1e4], "points_per_decade": 4},
            "tolerances": {"band_range": [0.99, 1.01], "window": [16, 1e4]}}
    code, _, err = _run(capsys, "verify", "--spec", _write(tmp_path, spec))
    assert code == cli.EXIT_OK, err


@pytest.mark.parametrize("change, code", [
    ({"regime": {"regime": "InfHilbertPoly", "alpha": -1}}, cli.EXIT_INPUT),
    ({"surprise": 1}, cli.EXIT_INPUT),
    ({"model": "nowhere"}, cli.EXIT_INPUT),
    ({"grids": {"t_range": [1e7, 1e8]}}, cli.EXIT_RUNTIME),
])
def test_verify_error_exits(tmp_path, capsys, change, code):
    spec = dict(POWER, **change)
    assert _run(capsys, "verify", "--spec", _write(tmp_path, spec), "--quiet")[0] == code


def test_missing_spec_file(capsys, tmp_path):
    assert _run(capsys, "simulate", "--spec", str(tmp_path / "absent.json"))[0] == cli.EXIT_INPUT


def test_predict_and_simulate(tmp_path, capsys):
    path = _write(tmp_path, POWER)
    code, out, _ = _run(capsys, "predict", "--spec", path, "--format", "json")
    body = json.loads(out)
    assert code == 0 and np.allclose(body["predicted"], np.asarray(body["t"]) ** -0.5)
    code, out, _ = _run(capsys, "simulate", "--spec", path, "--out", str(tmp_path / "sim.csv"))
    assert code == 0 and out == ""
    rows = list(csv.DictReader(open(tmp_path / "sim.csv")))
    assert len(rows) == 25


def test_spec_round_trip():
    spec = cli.ExperimentSpec.from_dict(POWER)
    again = cli.ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again.to_dict() == spec.to_dict()
    with pytest.raises(SpecError):
        cli.ExperimentSpec.from_dict(dict(POWER, version=99))


def test_audit_commands(capsys):
    code, out, _ = _run(capsys, "audit", "moment", "--trials", "100")
    assert code == 0 and json.loads(out)["violations"] == 0
    code, out, _ = _run(capsys, "audit", "karamata", "--sigma", "0.25")
    assert code == 0 and json.loads(out)["rel_error"] <= 1e-6
    code, out, _ = _run(capsys, "audit", "transfer", "--model", "power-a2", "--obs", '{"kind": "Power", "gamma": -2}')
    assert code == 0
    assert _run(capsys, "audit", "transfer", "--model", "mystery-a1")[0] == cli.EXIT_INPUT


def test_transform_command(capsys):
    code, out, _ = _run(capsys, "transform", "inversion", "--format", "json")
    body = json.loads(out)
    assert code == 0 and body["class"] == "bernstein" and body["membership"]


def test_write_atomic_replaces(tmp_path):
    p = tmp_path / "out.txt"
    p.write_text("old")
    cli.write_atomic(str(p), "new")
    assert p.read_text() == "new"
    assert os.listdir(tmp_path) == ["out.txt"]


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    assert float(cli.fmt(x)) == x


def test_fmt_special_values():
    assert cli.fmt(float("nan")) == "NaN"
    assert cli.fmt(float("inf")) == "Infinity"
    assert json.loads(cli.dump_json({"a": [1.0, float("nan")], "b": True}))["b"] is True


def test_formula_envelope_rejects_names():
    env = cli.formula_envelope("t**-0.5")
    assert env(100.0) == pytest.approx(0.1)
    with pytest.raises(SpecError):
        cli.formula_envelope("__import__('os')")


def test_log_corrected_regime_key(tmp_path, capsys):
    spec = dict(POWER, model="log-corrected-a1-b2", regime={"log_corrected": {"alpha": 1, "beta": 2}},
                grids={"t_range": [1e3, 1e7], "points_per_decade": 4}, tolerances={"band": 50})
    code, out, err = _run(capsys, "verify", "--spec", _write(tmp_path, spec), "--format", "json")
    assert code == cli.EXIT_OK, err
    assert json.loads(out)["formula"] == "t^(-1/alpha) (log t)^(-beta/alpha)"
