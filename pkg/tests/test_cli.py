import os

import pytest
import yaml

from vaasec import harness as H
from vaasec.cli import main


def write_config(tmp_path, **camp):
    raw = {"system": {"K": 3, "M": 2, "N": 1, "L": 1, "P_max_db": 10},
           "campaign": {"axis": "P_max_db", "values": [10], "algorithms": ["suboptimal"],
                        "realizations": 2, "out": "c.csv", **camp}}
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(raw))
    return str(p)


def test_simulate_writes_both_files(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--seed", "3", "--algorithms", "suboptimal,normal"]) == 0
    rows = H.read_csv(tmp_path / "o" / "c.csv")
    assert {r.seed for r in rows} == {3, 4}
    assert {r.algorithm for r in rows} == {"suboptimal", "normal"}
    assert os.path.exists(tmp_path / "o" / "c_mean.csv")


def test_single_runs(tmp_path, capsys):
    assert main(["single", "--config", write_config(tmp_path), "--algorithms", "normal"]) == 0


def test_fatal_errors_exit_one(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 1
    assert main(["simulate", "--config", write_config(tmp_path), "--algorithms", "nope"]) == 1
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["simulate", "--config", write_config(tmp_path), "--out", str(blocker / "x")]) == 1


def test_partial_failure_exits_two(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("x")
    monkeypatch.setattr(H, "run_algorithm", boom)
    assert main(["simulate", "--config", write_config(tmp_path), "--out", str(tmp_path)]) == 2


def test_verify_passes():
    assert main(["verify"]) == 0


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2
