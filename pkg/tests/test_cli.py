from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import THREE_VAR
from qubocompress import io as qio
from qubocompress.cli import main
from qubocompress.core import QuboInstance, diff_stats


@pytest.fixture
def three_var_file(tmp_path):
    p = tmp_path / "three_var.txt"
    qio.write_qubo(QuboInstance(np.array(THREE_VAR)), p)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestInfo:
    def test_three_var(self, capsys, three_var_file):
        code, out, _ = run(capsys, "info", three_var_file)
        rep = json.loads(out)
        assert code == 0
        assert rep["dr_bits"] == pytest.approx(3.64, abs=0.01)
        assert rep["n"] == 3 and not rep["degenerate"]

    def test_malformed_line(self, capsys, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("3\n0 0 -1\n0 1 x\n")
        code, _, err = run(capsys, "info", str(p))
        assert code == 2
        assert "line 3" in err

    def test_degenerate(self, capsys, tmp_path):
        p = tmp_path / "zero.txt"
        p.write_text("4\n")
        code, out, _ = run(capsys, "info", str(p))
        assert code == 0 and json.loads(out)["degenerate"]

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "info", str(tmp_path / "nope.txt"))[0] == 2


class TestCompress:
    def test_three_var_single_step(self, capsys, three_var_file, tmp_path):
        out_file = tmp_path / "c.txt"
        code, out, _ = run(capsys, "compress", three_var_file, "-H", "M", "-i", "1", "-b", "exhaustive",
                           "--positions", "1,2", "--out", str(out_file))
        summ = json.loads(out)
        assert code == 0
        assert summ["final_dr"] == pytest.approx(2.64, abs=0.01)
        assert summ["applied"] == 1 and summ["skipped"] == 0
        assert diff_stats(qio.read_qubo(out_file)).dr_bits == pytest.approx(2.64, abs=0.01)

    def test_zero_iterations_rejected(self, capsys, three_var_file):
        assert run(capsys, "compress", three_var_file, "-i", "0")[0] == 1

    def test_bad_flag_value(self, capsys, three_var_file):
        with pytest.raises(SystemExit) as exc:
            main(["compress", three_var_file, "-H", "Q"])
        assert exc.value.code == 1

    def test_bad_positions(self, capsys, three_var_file):
        assert run(capsys, "compress", three_var_file, "--positions", "a,b")[0] == 1

    def test_trace_reproducible(self, capsys, tmp_path):
        q = tmp_path / "q.txt"
        assert run(capsys, "gen", "uniform", "-n", "7", "--seed", "3", "--out", str(q))[0] == 0
        traces = []
        for name in ("a.csv", "b.csv"):
            t = tmp_path / name
            run(capsys, "compress", str(q), "-S", "random", "-i", "30", "--seed", "9",
                "--trace", str(t), "--format", "csv", "--out", str(tmp_path / "o.txt"))
            traces.append(t.read_bytes())
        assert traces[0] == traces[1]
        assert traces[0].startswith(b"iter,k,l,rank")

    def test_limit_exceeded(self, capsys, tmp_path):
        q = tmp_path / "big.txt"
        run(capsys, "gen", "uniform", "-n", "12", "--out", str(q))
        assert run(capsys, "solve", str(q), "--limit", "10")[0] == 3
        assert run(capsys, "spectral-gap", str(q), "--limit", "10")[0] == 3


class TestOtherCommands:
    def test_solve_exhaustive(self, capsys, three_var_file):
        code, out, _ = run(capsys, "solve", three_var_file)
        rep = json.loads(out)
        assert code == 0 and rep["min_value"] == pytest.approx(-1.9) and rep["minimizers"] == ["011"]

    def test_solve_sa(self, capsys, three_var_file):
        code, out, _ = run(capsys, "solve", three_var_file, "--method", "sa", "--reads", "10", "--sweeps", "50")
        assert code == 0 and json.loads(out)["best"] == "011"

    def test_spectral_gap(self, capsys, three_var_file):
        rep = json.loads(run(capsys, "spectral-gap", three_var_file)[1])
        assert rep["y1"] == pytest.approx(-1.9) and rep["gamma"] > 0

    def test_gen_subsetsum(self, capsys, tmp_path):
        prob = tmp_path / "p.json"
        code, out, _ = run(capsys, "gen", "subsetsum", "-n", "8", "--seed", "2", "--problem", str(prob))
        assert code == 0
        assert qio.loads_json(out).n == 8
        assert "target" in json.loads(prob.read_text())

    def test_gen_binclust(self, capsys, tmp_path):
        ds = tmp_path / "d.csv"
        code, out, _ = run(capsys, "gen", "binclust", "--dataset", str(ds), "--format", "json")
        assert code == 0 and json.loads(out)["n"] == 19
        assert ds.read_text().startswith("x,y,outlier")

    def test_metrics(self, capsys, three_var_file, tmp_path):
        c = tmp_path / "c.txt"
        run(capsys, "compress", three_var_file, "-i", "5", "--out", str(c))
        rep = json.loads(run(capsys, "metrics", str(c), three_var_file)[1])
        assert rep["dr_ratio"] <= 1 and rep["optimum_correctness"]


class TestExperiments:
    def test_rounding_config_merge(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 6, "instances": 40, "bins": 2, "max_bits": 6}))
        code, out, _ = run(capsys, "exp", "rounding", "--config", str(cfg), "--max-bits", "3")
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == "version,bin,dr_lo,dr_hi,bits,count,correct,proportion"
        assert len(lines) == 1 + 2 * 3  # flag wins over the config file

    def test_unknown_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert run(capsys, "exp", "rounding", "--config", str(cfg))[0] == 1

    def test_compress_experiment_reproducible(self, capsys):
        argv = ["exp", "compress", "--sizes", "5", "--instances", "3", "--iterations", "4",
                "--heuristics", "M", "--selections", "random", "--ranking-every", "2"]
        a, b = run(capsys, *argv)[1], run(capsys, *argv)[1]
        assert a == b
        assert len(a.splitlines()) == 1 + 5

    def test_noise(self, capsys):
        code, out, err = run(capsys, "exp", "noise", "-n", "6", "--reads", "7", "--sweeps", "20",
                             "--iterations", "3")
        assert code == 0
        assert len(out.splitlines()) == 1 + 2 * 7
        assert "prevalence_ratio" in err


def test_module_entry_point(three_var_file):
    r = subprocess.run([sys.executable, "-m", "qubocompress", "info", three_var_file], capture_output=True, text=True)
    assert r.returncode == 0 and "dr_bits" in r.stdout
