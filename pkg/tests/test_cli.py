import csv
import io
import json
import shutil
import subprocess

import jsonschema
import pytest

from finslercurv.cli import main
from finslercurv.report import schema

SPHERE3 = {"family": "round_sphere_chart", "dim": 3, "params": {"radius": 1.0}}
QUAD3 = {"family": "riemannian_quadratic", "dim": 3, "params": {"matrix": [
    [[[1, [0, 0, 0]], [0.3, [0, 2, 0]]], 0, 0], [0, 1.5, 0], [0, 0, [[1, [0, 0, 0]], [0.2, [1, 0, 0]]]]]}}
RANDERS2 = {"family": "randers", "dim": 2, "params": {"b": [[[0.4, [0, 1]]], [[0.4, [1, 0]]]]}}
CYL_S2 = {"cylinder": {"fiber": {"family": "round_sphere_chart", "dim": 2}}}


@pytest.fixture
def write(tmp_path):
    def _write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)
    return _write


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("command,metric,extra,expected", [
    ("tensors", SPHERE3, [], 0),
    ("tensors", {"family": "minkowski_norm", "dim": 4, "params": {"mix": 1.0}}, ["--points", "1"], 0),
    ("check-einstein", SPHERE3, [], 0),
    ("check-einstein", QUAD3, [], 1),
    ("conformal", RANDERS2, ["--sweep"], 0),
    ("warp", CYL_S2, ["--case", "cosh"], 0),
    ("warp", CYL_S2, ["--case", "linear"], 1),
])
def test_reports_validate_against_schema(capsys, write, command, metric, extra, expected):
    code, out, err = _run(capsys, command, "--metric", write("m.json", metric), "--points", "3", *extra)
    assert code == expected, err
    report = json.loads(out)
    jsonschema.validate(report, schema())
    assert report["command"] == command
    assert report["all_passed"] == (code == 0)
    if code == 1:
        assert "check failed" in err


def test_einstein_verdicts(capsys, write):
    _, out, _ = _run(capsys, "check-einstein", "--metric", write("m.json", SPHERE3))
    v = json.loads(out)["verdicts"]
    assert v["r_einstein"] and v["ricci_constant"] and not v["ricci_flat"]
    assert v["scal_h_mean"] == pytest.approx(6.0)


def test_conformal_factor_file_and_classification(capsys, write):
    u = write("u.json", {"kind": "affine", "coeffs": [0.0, 1.0, 0.0, 0.0]})
    code, out, err = _run(capsys, "conformal", "--metric", write("m.json", {"family": "euclidean", "dim": 3}),
                          "--conformal", u, "--points", "2")
    report = json.loads(out)
    assert code == 1 and "lce_vanishes" in err  # exp(x1)|dx| is not Einstein
    assert report["verdicts"]["verdict"] == "cotton_vanishing"
    names = {c["name"]: c["passed"] for c in report["checks"]}
    assert names["two_path[0]"] and not names["lce_vanishes"]


def test_csv_output(capsys, write):
    code, out, _ = _run(capsys, "check-einstein", "--metric", write("m.json", SPHERE3), "--points", "2",
                        "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 2
    assert {"index", "x1", "y3", "scal_h", "ric_h[0,0]"} <= set(rows[0])
    assert float(rows[0]["scal_h"]) == pytest.approx(6.0)


def test_points_file_box_and_out(capsys, write, tmp_path):
    pts = write("p.json", [{"x": [0.1, 0.0, 0.0], "y": [1.0, 0.0, 0.5]}])
    dest = tmp_path / "r.json"
    code, out, _ = _run(capsys, "tensors", "--metric", write("m.json", SPHERE3), "--points-file", pts,
                        "--out", str(dest))
    assert code == 0 and out == ""
    report = json.loads(dest.read_text())
    assert report["points"][0]["x"] == [0.1, 0.0, 0.0]
    code, out, _ = _run(capsys, "check-einstein", "--metric", write("m.json", SPHERE3), "--box",
                        "0:0.1,0:0.1,0:0.1", "--points", "3")
    assert code == 0
    assert all(0 <= v <= 0.1 for p in json.loads(out)["points"] for v in p["x"])


def test_tolerance_override_changes_outcome(capsys, write):
    m = write("m.json", QUAD3)
    assert _run(capsys, "check-einstein", "--metric", m, "--points", "2")[0] == 1
    # loosening the Einstein test brings in the Schur check, which quad3 still fails
    code, _, err = _run(capsys, "check-einstein", "--metric", m, "--points", "2", "--tol-einstein", "10")
    assert code == 1 and "schur" in err
    assert _run(capsys, "check-einstein", "--metric", m, "--points", "2", "--tol-einstein", "10",
                "--tol-schur=10")[0] == 0


@pytest.mark.parametrize("argv_tail,message", [
    (["--box", "0:1"], "--box"),
    (["--tol-nonsense", "1"], "unknown tolerance"),
    (["--tol-einstein", "abc"], "needs a number"),
    (["--points", "0"], "--points"),
    (["--jet-order", "1"], "jet_order"),
    (["--frobnicate"], "unrecognized"),
])
def test_usage_errors_exit_2(capsys, write, argv_tail, message):
    code, _, err = _run(capsys, "tensors", "--metric", write("m.json", SPHERE3), *argv_tail)
    assert code == 2 and message in err


def test_input_errors_exit_2(capsys, write, tmp_path):
    assert _run(capsys, "tensors", "--metric", str(tmp_path / "missing.json"))[0] == 2
    code, _, err = _run(capsys, "tensors", "--metric", write("bad.json", "{not json"))
    assert code == 2 and "bad.json:1" in err
    code, _, err = _run(capsys, "tensors", "--metric", write("m.json", {"family": "nope", "dim": 2}))
    assert code == 2 and "unknown metric family" in err
    code, _, err = _run(capsys, "conformal", "--metric", write("m.json", SPHERE3))
    assert code == 2 and "--conformal" in err
    code, _, err = _run(capsys, "tensors", "--metric", write("m.json", SPHERE3),
                        "--points-file", write("p.json", [{"x": [0, 0, 0], "y": [0, 0, 0]}]))
    assert code == 2 and "zero section" in err
    assert _run(capsys, "--help")[0] == 0
    assert _run(capsys)[0] == 2


def test_console_script_is_installed(tmp_path):
    exe = shutil.which("finslercurv")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "check-einstein" in proc.stdout
