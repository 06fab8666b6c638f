import csv
import json
import subprocess
import sys

import pytest

from liebscher.cli import main
from liebscher.io import read_sample_csv

EXAMPLE = {"p": [1 / 3, 2 / 3], "q": [0.75, 0.25]}
SPEC = {"bases": [{"kind": "independence"}, {"kind": "clayton", "theta": 5.0}], "A": [[1, 1], [0.3, 0.8]]}


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


@pytest.fixture
def sample_dir(tmp_path):
    out = tmp_path / "s"
    assert main(["sample", write(tmp_path / "ex.json", EXAMPLE), "-n", "300", "--seed", "1", "--out", str(out)]) == 0
    return out


def test_sample(sample_dir):
    s = read_sample_csv(sample_dir / "sample.csv")
    assert s.data.shape == (300, 2)
    assert s.meta["seed"] == 1 and s.meta["n"] == 300
    first = (sample_dir / "sample.csv").read_text().splitlines()
    assert first[0] == "x1,x2"
    m = manifest(sample_dir)
    assert m["status"] == "ok" and m["command"] == "sample"
    assert set(m["outputs"]) == {"sample.csv", "sample.json"}


def test_sample_general_spec(tmp_path):
    out = tmp_path / "o"
    assert main(["sample", write(tmp_path / "spec.json", SPEC), "-n", "50", "--seed", "2", "--out", str(out)]) == 0
    assert read_sample_csv(out / "sample.csv").n == 50


def test_rerun_is_byte_identical(tmp_path, sample_dir):
    again = tmp_path / "again"
    assert main(["sample", "--config", str(sample_dir / "manifest.json"), "--out", str(again)]) == 0
    assert (again / "sample.csv").read_bytes() == (sample_dir / "sample.csv").read_bytes()


def test_seed_from_environment(tmp_path, monkeypatch):
    spec = write(tmp_path / "ex.json", EXAMPLE)
    monkeypatch.setenv("LIEBSCHER_SEED", "42")
    assert main(["sample", spec, "-n", "20", "--out", str(tmp_path / "env")]) == 0
    monkeypatch.delenv("LIEBSCHER_SEED")
    assert main(["sample", spec, "-n", "20", "--seed", "42", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "sample.csv").read_bytes() == (tmp_path / "flag" / "sample.csv").read_bytes()
    assert manifest(tmp_path / "env")["seed"] == 42


def test_analyze(tmp_path, sample_dir):
    out = tmp_path / "a"
    args = ["analyze", "--spec", write(tmp_path / "ex.json", EXAMPLE), "--sample", str(sample_dir / "sample.csv"),
            "--n-boot", "20", "--seed", "3", "--out", str(out)]
    assert main(args) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["analytic"]["tau"] == pytest.approx(7 / 12, abs=1e-14)
    assert rep["tau_consistent"] is True
    assert 0 < rep["empirical"]["symmetry"]["pvalue"] <= 1
    rows = list(csv.reader(open(out / "kendall.csv")))
    assert rows[0] == ["t", "K"] and float(rows[-1][1]) == 1.0


def test_analyze_general_spec(tmp_path):
    out = tmp_path / "a"
    assert main(["analyze", "--spec", write(tmp_path / "spec.json", SPEC), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert set(rep["analytic"]) == {"lambda_L", "lambda_U"}


def test_symtest(tmp_path, sample_dir):
    out = tmp_path / "t"
    assert main(["symtest", str(sample_dir / "sample.csv"), "--n-boot", "10", "--seed", "1", "--out", str(out)]) == 0
    res = json.loads((out / "symtest.json").read_text())
    assert res["n_boot"] == 10


def test_abc_and_rerun(tmp_path, sample_dir):
    cfg = write(tmp_path / "cfg.json", {"M_prime": 40, "M": 5})
    out = tmp_path / "abc"
    assert main(["abc", str(sample_dir / "sample.csv"), "--config", cfg, "--seed", "4", "--workers", "2",
                 "--out", str(out)]) == 0
    m = manifest(out)
    assert m["config"]["M_prime"] == 40 and m["config"]["n"] == 300
    assert set(m["outputs"]) == {"retained.csv", "summaries.json", "posterior_rho.csv"}
    again = tmp_path / "again"
    assert main(["abc", "--config", str(out / "manifest.json"), "--workers", "1", "--out", str(again)]) == 0
    for name in m["outputs"]:
        assert (again / name).read_bytes() == (out / name).read_bytes()


@pytest.mark.parametrize("cmd, cfg, files", [
    ("table1", {"reps": 1, "m_prime": 20, "m": 4, "n": 80, "K": [2], "n_boot": 5}, ["table1.csv"]),
    ("table2", {"reps": 1, "m_prime": 20, "m": 4, "n": 80, "sigma2": [0.0, 0.01], "n_boot": 0}, ["table2.csv"]),
    ("compare", {"reps": 1, "n_list": [60], "m_prime": 20, "m": 4, "starts": 2}, ["compare.csv"]),
])
def test_experiments(tmp_path, cmd, cfg, files):
    out = tmp_path / cmd
    assert main([cmd, "--config", write(tmp_path / "c.json", cfg), "--seed", "5", "--out", str(out)]) == 0
    for f in files:
        assert (out / f).exists()
    if cmd == "compare":
        rows = list(csv.reader(open(out / "compare.csv")))
        assert rows[0] == ["rep", "n", "method", "parameter", "estimate", "runtime_ms"]
        assert len(rows) == 10


def test_bad_exponent_exit_2(tmp_path, capsys):
    bad = {"bases": ["independence", "comonotonic"], "A": [[1, 1], [1.5, 0.5]]}
    out = tmp_path / "o"
    assert main(["sample", write(tmp_path / "bad.json", bad), "-n", "5", "--out", str(out)]) == 2
    assert "A[1][0]" in capsys.readouterr().err
    assert manifest(out)["status"] == "FAILED"


def test_malformed_json_exit_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"p": [0.5, 0.5],\n "q": [0.5 0.5]}')
    assert main(["sample", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "broken.json:2:" in capsys.readouterr().err


def test_unknown_config_field_exit_2(tmp_path):
    assert main(["abc", "--config", write(tmp_path / "c.json", {"Mprime": 3}), "--out", str(tmp_path)]) == 2


def test_missing_input_exit_2(tmp_path):
    assert main(["symtest", "--out", str(tmp_path / "o")]) == 2


def test_runtime_failure_exit_3(tmp_path, sample_dir, capsys):
    cfg = write(tmp_path / "c.json", {"M_prime": 10, "M": 2, "model": "liebscher",
                                      "bases": ["independence", {"kind": "clayton"}]})
    out = tmp_path / "o"
    assert main(["abc", str(sample_dir / "sample.csv"), "--config", cfg, "--out", str(out)]) == 3
    assert "PriorUnsupported" in capsys.readouterr().err
    m = manifest(out)
    assert m["status"] == "FAILED" and "PriorUnsupported" in m["error"]


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "liebscher.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
