import json
import os
import subprocess
import sys

import pytest

from qhdlab.cli import main
from qhdlab.scenarios import load_config_file, write_atomic

SMALL = """
[scenario]
name = small
solver = qhd
[grid]
n = 33
[law]
terms = 1:2
[solver]
sigma = 0.5
t_final = 0.01
snapshot_dt = 2.5e-3
[boundary]
kind = dirichlet_velocity
[initial]
recipe = cosine
rho_amp = 0.1
rho_k = 3.141592653589793
u_amp = 0.2
u_k = 3.141592653589793
[monitors]
enabled = energy, identity, theorem2, vacuum
"""


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_predict_builtin(tmp_path, capsys):
    assert main(["predict", "predict", "--out", str(tmp_path)]) == 0
    doc = _json_out(capsys)
    assert abs(doc["I0"] - 1 / 6) <= 1e-5
    assert abs(doc["M0"] + 1 / 6) <= 1e-5
    assert abs(doc["T_star"] - 1) <= 1e-4
    assert (tmp_path / "predict-predict.json").exists()


def test_weights_ball_three_dimensional(capsys):
    assert main(["weights", "ball", "--dim", "3", "--samples", "1024"]) == 0
    doc = _json_out(capsys)
    assert doc["laplacian_a"] == pytest.approx(-6.0)
    assert doc["hessian_eigenvalues"] == [-2.0]
    assert doc["verification"]["passed"]


def test_unknown_key_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(SMALL.replace("n = 33", "n = 33\nnn = 4"))
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 2
    assert "unknown key(s) in [grid]: nn" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch",
    [("solver = qhd", "solver = magic"), ("sigma = 0.5", "sigma = 2"), ("terms = 1:2", "terms = 1")],
)
def test_invalid_values_are_config_errors(tmp_path, patch):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(SMALL.replace(*patch))
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 2


def test_missing_config_is_config_error():
    assert main(["run", "no-such-file.ini"]) == 2


@pytest.mark.parametrize("suite", ["numerics", "physics", "weights", "stationary"])
def test_verify_suites_pass(suite, capsys):
    assert main(["verify", suite]) == 0
    rep = _json_out(capsys)
    assert rep["passed"] and rep["checks"]


def _run_small(tmp_path, sub):
    d = tmp_path / sub
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    code = main(["run", str(cfg), "--out", str(d)])
    return code, d


def test_run_is_deterministic(tmp_path, capsys):
    code_a, a = _run_small(tmp_path, "a")
    code_b, b = _run_small(tmp_path, "b")
    assert code_a == code_b == 0
    assert (a / "small.csv").read_bytes() == (b / "small.csv").read_bytes()
    header = (a / "small.csv").read_text().splitlines()[0]
    assert header.startswith("t,")


def test_summary_json_reloads_as_config(tmp_path, capsys):
    code, d = _run_small(tmp_path, "a")
    summary = json.loads((d / "small.json").read_text())
    again = load_config_file(str(d / "small.json"))
    assert again.as_dict() == summary["run"]["config"]
    capsys.readouterr()
    # rerunning from the summary reproduces the CSV
    assert main(["run", str(d / "small.json"), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "small.csv").read_bytes() == (d / "small.csv").read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    out = tmp_path / "env"
    monkeypatch.setenv("QHDLAB_OUTPUT_DIR", str(out))
    assert main(["run", str(cfg)]) == 0
    assert (out / "small.csv").exists() and (out / "small.json").exists()


def test_atomic_write_leaves_no_temporaries(tmp_path):
    path = tmp_path / "sub" / "x.txt"
    write_atomic(str(path), "one\n")
    write_atomic(str(path), "two\n")
    assert path.read_text() == "two\n"
    assert os.listdir(path.parent) == ["x.txt"]


def test_stationary_verb(tmp_path, capsys):
    cfg = tmp_path / "st.ini"
    cfg.write_text("[stationary]\nname = flat\nJ = 0\nK = 2.0\nw0 = 1.001\ndx = 1e-3\nsweep_J = 0, 0.5\n")
    assert main(["stationary", str(cfg), "--out", str(tmp_path)]) == 0
    doc = _json_out(capsys)
    assert doc["event"] is None and doc["max_residual"] <= 1e-8
    assert [r["J"] for r in doc["sweep"]] == [0.0, 0.5]
    assert (tmp_path / "flat.csv").read_text().startswith("x,w,dw,residual")


def test_stationary_verb_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "st.ini"
    cfg.write_text("[stationary]\nK = 2.0\nbogus = 1\n")
    assert main(["stationary", str(cfg), "--out", str(tmp_path)]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "qhdlab.cli", "weights", "box", "--dim", "1", "--samples", "256"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert res.returncode == 0
    assert json.loads(res.stdout)["verification"]["passed"]
