import json

import pytest

from beamplace.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, main


def _write(path, data):
    path.write_text(json.dumps(data))
    return path


def test_run_writes_outputs(tmp_path, capsys):
    cfg = _write(tmp_path / "c.json", {"n_users": [10], "n_trials": 3})
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "out"), "--workers", "2"])
    assert code == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert names == ["cdf_beam_aperture.csv", "cdf_homo_balance.csv", "cdf_stage1_only.csv",
                     "cdf_two_stage.csv", "per_user.csv", "run.json", "summary.csv"]
    assert "two_stage" in capsys.readouterr().out


def test_run_overrides(tmp_path):
    cfg = _write(tmp_path / "c.json", {"n_users": [10]})
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--trials", "2", "--seed", "7",
                 "--algorithms", "two_stage,stage1_only"])
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "o" / "run.json").read_text())
    assert doc["config"]["n_trials"] == 2 and doc["config"]["seed"] == 7
    assert set(doc["trials"][0]["results"]) == {"two_stage", "stage1_only"}


def test_config_error_exit(tmp_path):
    cfg = _write(tmp_path / "c.json", {"n_users": [10], "weights": [0.9, 0.9]})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["validate", "--config", str(cfg)]) == EXIT_CONFIG
    cfg = _write(tmp_path / "d.json", {"n_users": [10]})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--algorithms", "nope"]) == EXIT_CONFIG


def test_infeasible_exit(tmp_path):
    cfg = _write(tmp_path / "c.json", {"n_users": [10], "n_trials": 2, "max_beams": 1})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_INFEASIBLE


def test_io_exit(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == EXIT_IO
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == EXIT_IO
    cfg = _write(tmp_path / "c.json", {"n_users": [5], "n_trials": 1})
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--config", str(cfg), "--out", str(blocker / "sub")]) == EXIT_IO


def test_validate_ok(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_users: [10, 15]\nn_trials: 5\n")
    assert main(["validate", "--config", str(cfg)]) == EXIT_OK
    assert "ok" in capsys.readouterr().out


def test_example1_command(capsys):
    assert main(["example1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "H3: (1,3,4), (1,4,5), (1,5,7), (2,8,10)" in out
    assert "stage 1: |B| = 4: (1,5,7), (2,8,10), (3,6), (4,9)" in out


def test_missing_subcommand():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
