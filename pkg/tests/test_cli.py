import json
import os

import pytest

from isingtree.cli import (
    EXIT_CHECK_FAILED,
    EXIT_PASS,
    EXIT_USAGE,
    ExperimentConfig,
    ConfigError,
    main,
)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_usage_errors(capsys):
    code, _, _ = run(capsys)  # no subcommand
    assert code == EXIT_USAGE
    code, _, _ = run(capsys, "experiment", "no-such-experiment")
    assert code == EXIT_USAGE
    code, _, err = run(capsys, "sample", "broadcast", "--d", "1")
    assert code == EXIT_USAGE
    assert "d=1" in err
    code, _, err = run(capsys, "sample", "broadcast",
                       "--beta", "0.5", "--tanh-beta", "0.5")
    assert code == EXIT_USAGE


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(tanh_beta=1.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(beta=-0.1)
    with pytest.raises(ConfigError):
        ExperimentConfig(gamma=0.5, tanh_beta=0.2)
    with pytest.raises(ConfigError):
        ExperimentConfig(dt=0.0)
    cfg = ExperimentConfig()
    assert cfg.tanh_beta == 0.2
    assert cfg.beta == pytest.approx(0.2027325540540822)


def test_sample_deterministic_stdout(capsys):
    args = ("sample", "broadcast", "--d", "3", "--depth", "2",
            "--tanh-beta", "0.3", "--replicas", "4", "--seed", "9")
    code_a, out_a, _ = run(capsys, *args)
    code_b, out_b, _ = run(capsys, *args)
    assert code_a == code_b == EXIT_PASS
    assert out_a == out_b
    lines = out_a.strip().splitlines()
    assert lines[0] == "vertex_label,spin"
    assert len(lines) == 1 + 4 * 10
    label, spin = lines[1].split(",")
    assert spin in ("-1", "1")


def test_sample_conditional_runs(capsys):
    code, out, _ = run(capsys, "sample", "conditional", "--d", "2",
                       "--depth", "1", "--replicas", "2", "--seed", "0")
    assert code == EXIT_PASS
    assert out.startswith("vertex_label,spin")


def test_experiment_writes_outputs_and_reruns_identically(tmp_path, capsys):
    args = ("experiment", "depth-decay", "--d", "3", "--tanh-beta", "0.2",
            "--t", "0.2", "--dt", "0.05", "--r-max", "2",
            "--replicas", "40", "--seed", "1", "--out", str(tmp_path))
    code, out, _ = run(capsys, *args)
    assert code == EXIT_PASS
    assert "depth-decay" in out
    j = tmp_path / "depth-decay.json"
    c = tmp_path / "depth-decay.csv"
    m = tmp_path / "depth-decay.manifest.json"
    assert j.exists() and c.exists() and m.exists()
    body = json.loads(j.read_text())
    assert body["passed"] is True
    assert body["ratio_ucb95"] < 1.0
    assert c.read_text().splitlines()[0] == "R,estimate,standard_error"
    man = json.loads(m.read_text())
    assert man["config"]["seed"] == 1
    assert "sha256" in man["outputs"][str(j.name)] or man["outputs"]

    first_json, first_csv = j.read_bytes(), c.read_bytes()
    code, _, _ = run(capsys, *args)
    assert code == EXIT_PASS
    assert j.read_bytes() == first_json
    assert c.read_bytes() == first_csv


def test_config_file_and_env_precedence(tmp_path, capsys, monkeypatch):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"d": 3, "depth": 1, "replicas": 2,
                                    "tanh_beta": 0.4, "seed": 5}))
    # env overrides the file, flags override env
    monkeypatch.setenv("ISINGTREE_REPLICAS", "3")
    code, out, _ = run(capsys, "sample", "broadcast",
                       "--config", str(cfg_file))
    assert code == EXIT_PASS
    assert len(out.strip().splitlines()) == 1 + 3 * 4
    code, out, _ = run(capsys, "sample", "broadcast",
                       "--config", str(cfg_file), "--replicas", "1")
    assert len(out.strip().splitlines()) == 1 + 1 * 4


def test_bad_env_value(capsys, monkeypatch):
    monkeypatch.setenv("ISINGTREE_SEED", "not-an-int")
    code, _, err = run(capsys, "sample", "broadcast")
    assert code == EXIT_USAGE
    assert "ISINGTREE_SEED" in err


def test_missing_config_file(capsys):
    code, _, err = run(capsys, "sample", "broadcast",
                       "--config", "/nonexistent/cfg.json")
    assert code == EXIT_USAGE


def test_unwritable_out_dir(capsys):
    code, _, err = run(capsys, "experiment", "glauber",
                       "--out", "/proc/definitely-not-writable")
    assert code == EXIT_USAGE
    assert "not writable" in err
