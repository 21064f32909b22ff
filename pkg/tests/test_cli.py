import csv
import io
import json

import numpy as np
import pytest

from evmcv import cli, distributions as dist, harness

CONFIG = """
[experiment]
experiment_id = "normal-cos"
integrand = "sumcos"
family = "poly1d"
methods = ["evm", "ls"]
n_train = 200
n_test = 5000
seed = 3

[experiment.density]
id = "std_normal"
dim = 1
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(CONFIG)
    return path


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_run_single_experiment(config, capsys):
    code, out, _ = run(["run", "--config", str(config)], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 2 and lines[0].startswith("experiment_id,n_train")


def test_run_writes_only_the_output_path(config, tmp_path, capsys, monkeypatch):
    work = tmp_path / "work"
    work.mkdir()
    monkeypatch.chdir(work)
    out = tmp_path / "report.json"
    code, stdout, _ = run(["run", "--config", str(config), "--out", str(out), "--format", "json"],
                          capsys)
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())[0]["experiment_id"] == "normal-cos"
    assert list(work.iterdir()) == []


def test_seed_override_is_deterministic(config, tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["run", "--config", str(config), "--seed", "42", "--out", str(a)], capsys)[0] == 0
    assert run(["run", "--config", str(config), "--seed", "42", "--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert next(csv.DictReader(io.StringIO(a.read_text())))["seed"] == "42"


def test_malformed_config_names_key(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(CONFIG.replace("n_test = 5000", "n_tset = 5000"))
    code, _, err = run(["run", "--config", str(path)], capsys)
    assert code == 1 and "n_tset" in err


def test_missing_config_names_path(tmp_path, capsys):
    path = tmp_path / "nowhere.toml"
    code, _, err = run(["run", "--config", str(path)], capsys)
    assert code == 1 and str(path) in err


def test_fit_failure_exits_two(config, capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise harness.FitError("singular")

    monkeypatch.setattr(harness, "evm_fit_linear", boom)
    code, out, err = run(["run", "--config", str(config), "--jobs", "1"], capsys)
    assert code == 2 and "singular" in err
    assert len(out.splitlines()) == 2  # the partial report is still written


def test_unwritable_output(config, tmp_path, capsys):
    target = tmp_path / "no" / "such" / "dir.csv"
    code, _, err = run(["run", "--config", str(config), "--out", str(target)], capsys)
    assert code == 2 and str(target) in err


def test_table_one(capsys):
    code, out, _ = run(["table", "1", "--jobs", "1"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 7 and "ref_svar" in rows[0]


def test_table_basket_row_count(capsys, monkeypatch):
    def fake(config):
        return harness.ExperimentReport(config.experiment_id, config.n_train, config.n_test,
                                        config.seed, svar=1.0, svar_evm=0.5)

    monkeypatch.setattr(harness, "run_experiment", fake)
    code, out, _ = run(["table", "6", "--jobs", "1"], capsys)
    assert code == 0 and len(out.splitlines()) == 6


@pytest.mark.parametrize("n", ["0", "8"])
def test_table_out_of_range(n, capsys):
    assert run(["table", n], capsys)[0] == 1


def test_table_replicate(capsys, monkeypatch):
    monkeypatch.setattr(harness, "table_configs", lambda t: [
        c for c in harness.TABLES[1](harness.DEFAULT_SEED) if c.experiment_id == "t1-exp-sumcos"])
    code, out, _ = run(["table", "1", "--replicate", "3", "--jobs", "1"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["k"] == "3" and float(rows[0]["median_ratio"]) > 1


def test_parallel_matches_serial(tmp_path, capsys):
    path = tmp_path / "two.toml"
    block = CONFIG.replace("[experiment]", "[[experiment]]")
    path.write_text(block + block.replace('"normal-cos"', '"normal-cos-2"'))
    serial = run(["run", "--config", str(path), "--jobs", "1"], capsys)
    parallel = run(["run", "--config", str(path), "--jobs", "2"], capsys)
    assert serial[0] == parallel[0] == 0 and serial[1] == parallel[1]
    assert len(serial[1].splitlines()) == 3


def test_verify_passes(capsys):
    code, out, _ = run(["verify"], capsys)
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert lines and all(l.startswith("PASS") for l in lines)
    for name in ("score_fd[std_normal]", "stein_zero_mean[basket_exp2]", "lower_bound[n=10]",
                 "u_statistic_identity", "zero_variance[exp1/cos]", "hermite_mean[2]"):
        assert name in out


def test_verify_detects_wrong_score(capsys, monkeypatch):
    class WrongScore(dist.StdNormal):
        def _score(self, x):
            return -1.01 * x

    monkeypatch.setitem(cli.VERIFY_DENSITIES, "broken", lambda: WrongScore(2))
    code, out, _ = run(["verify"], capsys)
    assert code == 2 and "FAIL  score_fd[broken]" in out


def test_list(capsys):
    code, out, _ = run(["list"], capsys)
    assert code == 0 and "6: 5 rows" in out and "basket_exp2" in out


def test_unknown_flag_is_an_error(config, capsys):
    assert run(["run", "--config", str(config), "--colour"], capsys)[0] == 1
    assert run([], capsys)[0] == 1
    assert run(["run", "--config", str(config), "--seed", "-3"], capsys)[0] == 1
    assert run(["run", "--config", str(config), "--format", "xml"], capsys)[0] == 1


@pytest.mark.parametrize("sub", ["run", "table"])
def test_help_lists_every_flag(sub, capsys):
    assert cli.main([sub, "--help"]) == 0
    out = capsys.readouterr().out
    for flag in ("--out", "--format", "--seed", "--replicate", "--jobs"):
        assert flag in out
    if sub == "run":
        assert "--config" in out
