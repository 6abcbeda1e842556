import json

import yaml

from relaxkit.cli import main


def test_enumerate(capsys):
    assert main(["enumerate", "TJz", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["subspace_count"] == 31
    assert main(["enumerate", "Dip_one_H3", "6", "--impurity", "state_flip:6"]) == 0


def test_predict(capsys):
    assert main(["predict", "U1", "none", "bulk", "--t", "4", "--exact", "--x", "0", "--x0", "0.001"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["exponent"] == -0.5 and abs(out["predicted"] / out["kernel"] - 1) < 1e-3


def test_predict_unknown_regime(capsys):
    assert main(["predict", "dipole", "none", "late"]) == 2
    assert "no asymptotic law" in capsys.readouterr().err


def test_run_compare_and_validation(tmp_path, capsys):
    d = {"experiment_id": "cli_small", "engine": "automaton", "model": "TJz", "L": 4,
         "time_grid": {"kind": "linear", "t_min": 0, "t_max": 50}, "samples": 50000, "seed": 1}
    path = tmp_path / "d.yaml"
    path.write_text(yaml.safe_dump(d))
    assert main(["run", str(path), "--output", str(tmp_path / "res")]) == 0
    o = dict(d, experiment_id="cli_oracle", task="oracle")
    (tmp_path / "o.yaml").write_text(yaml.safe_dump(o))
    assert main(["run", str(tmp_path / "o.yaml"), "--output", str(tmp_path / "res")]) == 0
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "res" / "cli_small"), str(tmp_path / "res" / "cli_oracle")]) == 0
    assert json.loads(capsys.readouterr().out)["passed"]
    bad = dict(d, samples=0)
    (tmp_path / "bad.yaml").write_text(yaml.safe_dump(bad))
    assert main(["run", str(tmp_path / "bad.yaml")]) == 2
    assert "samples" in capsys.readouterr().err


def test_run_all_single_criterion(tmp_path, capsys):
    assert main(["run-all", "--only", "12", "--output", str(tmp_path)]) == 0
    assert "[PASS] acceptance_12_parent" in capsys.readouterr().out
