"""CLI behavior: exit codes, report/replay files, seed resolution."""

import json
import re
import subprocess
import sys

import pytest

from eqvit.cli import ENV_SEED, main


def run_cli(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main(["run", "--out", str(out), *argv])
    return code, out


def test_small_run_exits_zero_and_writes_report(tmp_path, capsys):
    code, out = run_cli(tmp_path, "--suite", "claim1", "--trials", "5")
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("suite claim1: 5 trials, 5 passed, 0 failed")
    assert f"report written to {out}" in lines
    report = json.loads(out.read_text())
    assert report["suite_config"]["trials"] == 5
    assert report["suites"][0]["failures"] == 0

    replay_file = tmp_path / "report.replay.json"
    assert json.loads(replay_file.read_text())["kind"] == "sentinel"


def test_reports_are_byte_deterministic(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    args = ["--suite", "claim2", "--suite", "end2end", "--trials", "10", "--seed", "3"]
    assert main(["run", "--out", str(a), *args]) == 0
    assert main(["run", "--out", str(b), *args]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_failing_run_exits_one_and_replays(tmp_path, capsys):
    code, out = run_cli(
        tmp_path, "--suite", "end2end", "--disable", "a_token", "--trials", "20"
    )
    assert code == 1
    assert "11 failed" in capsys.readouterr().out

    replay_file = tmp_path / "report.replay.json"
    doc = json.loads(replay_file.read_text())
    assert doc["kind"] == "counterexample" and doc["suite"] == "end2end"

    assert main(["replay", str(replay_file)]) == 1
    line = capsys.readouterr().out
    assert "reproduced divergence" in line
    drift = float(re.search(r"drift (\S+),", line).group(1))
    assert drift == 0.0


def test_replay_sentinel_exits_zero(tmp_path, capsys):
    run_cli(tmp_path, "--suite", "claim3", "--trials", "3")
    capsys.readouterr()
    assert main(["replay", str(tmp_path / "report.replay.json")]) == 0
    assert "nothing to reproduce" in capsys.readouterr().out


def test_ablation_counterexample_file_replays(tmp_path, capsys):
    code, out = run_cli(tmp_path, "--suite", "ablation", "--trials", "40")
    assert code == 0
    cx = tmp_path / "report.ablation.replay.json"
    assert cx.exists()
    assert main(["replay", str(cx)]) == 1
    line = capsys.readouterr().out.splitlines()[-1]
    drift = float(re.search(r"drift (\S+),", line).group(1))
    assert drift <= 1e-12


def test_env_seed_and_flag_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_SEED, "41")
    _, out = run_cli(tmp_path, "--suite", "claim1", "--trials", "2")
    assert json.loads(out.read_text())["suite_config"]["seed"] == 41

    _, out = run_cli(tmp_path, "--suite", "claim1", "--trials", "2", "--seed", "5")
    assert json.loads(out.read_text())["suite_config"]["seed"] == 5


def test_custom_model_config_file(tmp_path):
    cfg = {
        "input_shape": [32],
        "channels": 1,
        "patch_len": 4,
        "depth": 1,
        "windows": [4],
        "merge_factors": [2],
        "embed_dim": 8,
        "num_classes": 4,
        "seed": 2,
    }
    path = tmp_path / "model.json"
    path.write_text(json.dumps(cfg))
    code, out = run_cli(
        tmp_path, "--config", str(path), "--suite", "end2end", "--trials", "10"
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert report["model_config"]["input_shape"] == [32]
    assert report["model_config"]["seed"] == 2  # config seed, no flag/env


def test_prove_with_size_knobs(tmp_path, capsys):
    out = tmp_path / "proof.json"
    code = main(
        ["prove", "--suite", "lemma1", "--n", "4", "--n", "8", "--l", "2",
         "--trials", "10", "--out", str(out)]
    )
    assert code == 0
    assert "suite lemma1" in capsys.readouterr().out
    report = json.loads(out.read_text())
    assert report["suite_config"]["lemma_n"] == [4, 8]
    assert report["suite_config"]["lemma_l"] == [2]


def test_prove_defaults_to_oracle_suites(tmp_path):
    out = tmp_path / "proof.json"
    assert main(["prove", "--trials", "5", "--out", str(out)]) == 0
    names = [r["name"] for r in json.loads(out.read_text())["suites"]]
    assert names == ["lemma1", "claim1", "claim2", "claim3"]


# -------------------------------------------------------------- exit code 2 --


def test_missing_config_file_is_a_config_error(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "--config", str(tmp_path / "nope.json"))
    assert code == 2
    assert capsys.readouterr().err.startswith("error: cannot read model config")


def test_invalid_config_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _ = run_cli(tmp_path, "--config", str(bad))
    assert code == 2


def test_unknown_config_key(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"input_shape": [64], "heads": 4}))
    code, _ = run_cli(tmp_path, "--config", str(bad))
    assert code == 2
    assert "heads" in capsys.readouterr().err


def test_bad_env_seed(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(ENV_SEED, "not-a-number")
    code, _ = run_cli(tmp_path, "--suite", "claim1", "--trials", "2")
    assert code == 2
    assert ENV_SEED in capsys.readouterr().err


def test_replay_missing_file(tmp_path, capsys):
    assert main(["replay", str(tmp_path / "gone.json")]) == 2
    assert "cannot read replay file" in capsys.readouterr().err


def test_unknown_suite_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--suite", "claim9"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "report.json"
    proc = subprocess.run(
        [sys.executable, "-m", "eqvit", "run", "--suite", "claim3",
         "--trials", "3", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "suite claim3" in proc.stdout
    assert out.exists()
