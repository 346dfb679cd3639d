import json
import subprocess
import sys
from fractions import Fraction

import pytest

from sinefactor.cli import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, SCHEMA, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out)


def test_factor_square(capsys):
    code, doc = run_json(capsys, "factor", "sin(pi*z)^2", "--cutoff", "50")
    assert code == EXIT_OK
    assert doc["schema"] == SCHEMA and doc["command"] == "factor"
    (f,) = doc["form"]["factors"]
    assert [Fraction(c) for c in f["alpha_over_pi"]] == [1]
    assert f["k"] == 2 and abs(f["beta"]) < 1e-12
    assert doc["verification"]["max_residual"] < 1e-8


def test_roots_csv(capsys):
    code, out, _ = run(capsys, "roots", "sin(pi*z)", "--window", "-5.5", "5.5", "--format", "csv")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "location,multiplicity"
    xs = [float(l.split(",")[0]) for l in lines[1:]]
    assert len(xs) == 11
    assert max(abs(x - n) for x, n in zip(xs, range(-5, 6))) < 1e-10


@pytest.fixture
def secular3(tmp_path, capsys):
    path = tmp_path / "sec3.json"
    code, _, _ = run(capsys, "generate", "secular", "--lengths", "sqrt(1)", "sqrt(2)", "sqrt(3)",
                     "--seed", "1", "--out", str(path))
    assert code == EXIT_OK
    return path


def test_meyer_secular_superlinear(capsys, secular3):
    code, doc = run_json(capsys, "meyer", "--input", str(secular3), "--cutoff", "10")
    assert code == EXIT_NEGATIVE
    assert doc["meyer"]["verdict"] == "Superlinear"
    assert doc["secular_spec"]["seed"] == 1


def test_factor_secular_not_a_sine_product(capsys, secular3):
    code, doc = run_json(capsys, "factor", "--input", str(secular3), "--cutoff", "10")
    assert code == EXIT_NEGATIVE
    assert doc["outcome"]["error"] == "NotASineProduct"
    assert doc["outcome"]["residual_mass"] > 0


def test_errors_go_to_stderr(capsys):
    code, out, err = run(capsys, "parse", "sin((1+i)*z)")
    assert code == EXIT_ERROR and out == ""
    doc = json.loads(err)
    assert doc["error"] == "ParseError" and "frequency not real" in doc["message"]
    code, _, err = run(capsys, "parse", "--input", "/nonexistent/file.json")
    assert code == EXIT_ERROR and json.loads(err)["error"] == "FileNotFoundError"


def test_reports_embed_input_and_parameters(capsys):
    code, doc = run_json(capsys, "hcoeffs", "sin(pi*z+0.3)", "--cutoff", "5", "--tol", "1e-7")
    assert code == EXIT_OK
    assert doc["parameters"]["cutoff"] == 5.0 and doc["parameters"]["tol"] == 1e-7
    assert doc["input"]["terms"] and doc["expression"] == "sin(pi*z+0.3)"
    assert len(doc["upper"]["atoms"]) == 5


def test_determinism_modulo_timestamp(capsys):
    argv = ["report", "sin(pi*z)*sin(sqrt2*pi*z+0.5)", "--basis", "sqrt2=1.4142135623730950488016887242097",
            "--window", "-30.1", "30.1", "--cutoff", "20"]
    _, a = run_json(capsys, *argv)
    _, b = run_json(capsys, *argv)
    a.pop("timestamp"), b.pop("timestamp")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["certification"]["certified"]
    assert a["consistency"]["consistent"]
    assert a["meyer"]["verdict"] == "Linear"
    assert a["diffraction"]["max_abs_error"] < 0.1


def test_fourier_both_modes(capsys):
    code, doc = run_json(capsys, "fourier", "sin(pi*z)", "--cutoff", "3")
    assert code == EXIT_OK and len(doc["measure"]["atoms"]) == 7
    code, out, _ = run(capsys, "fourier", "sin(pi*z)", "--compare", "200", "--top-k", "4", "--format", "csv")
    assert code == EXIT_OK and len(out.strip().splitlines()) == 6


def test_generate_sine_then_factor(capsys, tmp_path):
    path = tmp_path / "q.json"
    code, _, _ = run(capsys, "generate", "sine", "--basis", "sqrt2=1.4142135623730950488016887242097",
                     "--factor", "1:0.3:2", "--factor", "sqrt2:1.1", "--C", "2", "--out", str(path))
    assert code == EXIT_OK
    code, doc = run_json(capsys, "factor", "--input", str(path))
    assert code == EXIT_OK
    got = sorted((f["k"], round(f["beta"], 9)) for f in doc["form"]["factors"])
    assert got == [(1, 1.1), (2, 0.3)]
    assert abs(doc["form"]["C"]["re"] - 2) < 1e-8


def test_output_file(capsys, tmp_path):
    path = tmp_path / "out.json"
    code, out, _ = run(capsys, "parse", "cos(pi*z/2)", "--out", str(path))
    assert code == EXIT_OK and out == ""
    assert json.loads(path.read_text())["command"] == "parse"


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sinefactor.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
