import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from nashloj.cli import main

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "golden"
CIRCLE = str(GOLDEN / "circle.json")
AXES = str(GOLDEN / "axes.json")


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    text = out.getvalue()
    return code, (json.loads(text) if text else None), text


def lookup(doc, path):
    for key in path.split("."):
        doc = doc[int(key)] if isinstance(doc, list) else doc[key]
    return doc


# -- bounds and suffdeg ------------------------------------------------------------------

def test_bounds_command():
    code, doc, _ = run("bounds", "--n", "2", "--d", "2", "--partial-y-nonzero")
    assert code == 0 and doc["schema"] == 1
    assert doc["summary"]["theorem_2_1"] == "1 - 1/33"
    assert doc["best_rho_bound"] == "32/33"


def test_bounds_with_rho():
    code, doc, _ = run("bounds", "--n", "2", "--d", "2", "--rho", "1/2")
    assert code == 0 and doc["summary"]["corollary_3_7"] == "2"
    code, doc, _ = run("bounds", "--n", "2", "--d", "2", "--rho", "1")
    assert code == 1 and doc["error"]["type"] == "ValueError"


def test_suffdeg_command():
    code, doc, _ = run("suffdeg", "--n", "2", "--d", "2")
    assert code == 0 and doc["k"] == 4374 and doc["source"] == "Theorem 1.3"


def test_suffdeg_audit_circle():
    code, doc, _ = run("suffdeg", "--n", "2", "--d", "2", "--branch", CIRCLE)
    assert code == 0
    assert abs(doc["audit"]["beta_hat"] - 1.0) <= 0.05 and doc["audit"]["verdict"] == "pass"


def test_suffdeg_audit_axes():
    code, doc, _ = run("suffdeg", "--n", "2", "--d", "4", "--branch", AXES)
    assert code == 0 and doc["k"] == 2 * 7 ** 7
    assert abs(doc["audit"]["beta_hat"] - 3.0) <= 0.1
    code, doc, _ = run("suffdeg", "--n", "2", "--d", "4", "--branch", AXES, "--k", "2")
    assert code == 1 and doc["audit"]["verdict"] == "fail"


# -- estimate, eliminate, flow ---------------------------------------------------------------

def test_estimate_command(tmp_path):
    csv = tmp_path / "plot.csv"
    code, doc, _ = run("estimate", "--branch", CIRCLE, "--epsilon", "0.5", "--starts", "8", "--csv", str(csv))
    assert code == 0 and abs(doc["rho_hat"] - 0.5) <= 0.01
    assert len(doc["profile"]) == 10
    rows = csv.read_text().splitlines()
    assert rows[0] == "log_abs_y,log_sqrt_u,sign" and len(rows) == 11


def test_eliminate_command():
    code, doc, _ = run("eliminate", "--branch", AXES)
    assert code == 0
    assert doc["Q"] == "-64*y^3 + u^2" and doc["lemma58"] == "3/4" and doc["slopes"] == ["3/4"]
    assert doc["budget"] >= doc["D"]


def test_eliminate_case_II():
    code, doc, _ = run("eliminate", "--branch", CIRCLE, "--case", "II", "--r", "1")
    assert code == 0 and doc["Q"] == "u - 4" and doc["budget"] == 12
    assert run("eliminate", "--branch", CIRCLE, "--case", "II")[0] == 2


def test_eliminate_interpolate():
    code, doc, _ = run("eliminate", "--branch", CIRCLE, "--method", "interpolate", "--cap", "4")
    assert code == 0 and doc["Q"] == "u - 4*y"


def test_flow_command(tmp_path):
    trace = tmp_path / "trace.csv"
    code, doc, _ = run("flow", "--branch", CIRCLE, "--start", "0.6,0.8", "--check", "0.5,2",
                       "--trace", str(trace))
    assert code == 0
    assert doc["terminal"] == "reached_zero_level" and abs(doc["arc_length"] - 1.0) <= 1e-4
    # the start lies on the unit sphere, outside U, so the verdict is informational
    assert doc["check"]["verdict"] == "informational"
    assert doc["check"]["lower_ok"] and doc["check"]["upper_ok"]
    assert trace.read_text().splitlines()[0] == "x1,x2,f"


def test_numeric_failure_is_structured():
    code, doc, _ = run("flow", "--branch", CIRCLE, "--start", "0,0")
    assert code == 1
    assert doc["error"]["type"] == "StartOnZeroSet" and doc["command"] == "flow"


def test_missing_branch_file_is_structured(tmp_path):
    code, doc, _ = run("estimate", "--branch", str(tmp_path / "none.json"))
    assert code == 1 and doc["error"]["type"] == "FileNotFoundError"


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["bounds", "--n", "2"], ["bounds", "--n", "x", "--d", "2"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert "usage" in capsys.readouterr().err


# -- report -------------------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["circle", "axes"])
def test_report_matches_golden(name):
    gold = json.loads((GOLDEN / f"report_{name}.json").read_text())
    code, doc, text = run(*gold["argv"], "--branch", str(GOLDEN / gold["branch"]))
    assert code == 0
    for f in gold["fields"]:
        got = lookup(doc, f["path"])
        if "abs_tol" in f:
            assert abs(got - f["value"]) <= f["abs_tol"], f["path"]
        else:
            assert got == f["value"], f["path"]
    assert all(v["outcome"] in ("pass", "informational") for v in doc["verdicts"])
    # lossless round trip
    assert json.loads(json.dumps(doc)) == doc


def test_report_deterministic_subprocess():
    cmd = [sys.executable, "-m", "nashloj", "report", "--branch", CIRCLE, "--seed", "0"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"{")
