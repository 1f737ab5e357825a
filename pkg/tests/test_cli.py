import json
import subprocess
import sys

import numpy as np

from roughsde import cli
from roughsde.experiments import RateReport


def test_missing_config_exits_one(capsys):
    assert cli.run_cli(["wz", "--config", "missing.json"]) == 1
    assert "missing.json" in capsys.readouterr().err


def test_bad_arguments_exit_one(capsys):
    assert cli.run_cli(["nope"]) == 1
    assert cli.run_cli(["wz", "--seed", "x"]) == 1
    assert cli.run_cli(["ratefn", "--velocity", "3,a"]) == 1
    assert capsys.readouterr().err.count("error:") == 3


def test_config_for_other_experiment(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"experiment": "levyrate"}))
    assert cli.run_cli(["wz", "--config", str(path)]) == 1


def test_ratefn_velocity(capsys):
    assert cli.run_cli(["ratefn", "--velocity", "3,4"]) == 0
    assert capsys.readouterr().out.strip() == "12.5"


def test_rerun_byte_identical(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"experiment": "wz", "ref_level": 7, "levels": [4, 5, 6], "replicates": 3, "seed": 5}))
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert cli.run_cli(["wz", "--config", str(path), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    line = capsys.readouterr().out.splitlines()[0]
    assert line.startswith("wz/classical_circle:") and "slope=" in line
    assert cli.run_cli(["wz", "--config", str(path), "--out", str(tmp_path / "c.csv"), "--seed", "6", "--quiet"]) == 0
    assert (tmp_path / "c.csv").read_bytes() != outs[0]
    assert capsys.readouterr().out == ""


def test_divergence_exit_two(monkeypatch, capsys):
    def fake(cfg):
        vals = {"sup": {4: np.array([1.0] * 8 + [np.nan] * 2)}}
        return RateReport("wz", "classical_circle", {}, vals, excluded=2, replicates=10)

    monkeypatch.setattr(cli, "run_experiment", fake)
    assert cli.run_cli(["wz"]) == 2
    assert "2 of 10" in capsys.readouterr().err

    def fine(cfg):
        return RateReport("wz", "classical_circle", {}, {"sup": {4: np.ones(10)}}, excluded=1, replicates=10)

    monkeypatch.setattr(cli, "run_experiment", fine)
    assert cli.run_cli(["wz"]) == 0


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "roughsde.cli", "ratefn", "--velocity", "1,0"], capture_output=True, text=True
    )
    assert res.returncode == 0 and res.stdout.strip() == "0.5"
