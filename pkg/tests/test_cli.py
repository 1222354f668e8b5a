import json

import pytest

from pqos_sim.cli import main

TINY = {
    "policy": "constant:C-SC",
    "seed": 3,
    "scenario": {"duration_s": 1.0},
}

DQL_TINY = {
    "policy": "dql",
    "seed": 3,
    "scenario": {"duration_s": 1.0},
    "agent": {
        "hidden_sizes": [4],
        "batch_size": 4,
        "replay_capacity": 64,
        "epsilon_decay_steps": 40,
    },
}


def write_config(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_run_writes_artifacts_and_prints_summary(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "policy=constant:C-SC" in printed
    assert "meanQoE=0.8800" in printed
    assert (out / "summary.json").exists()
    assert (out / "windows.csv").exists()


def test_run_seed_override(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    assert main(["run", cfg, "--seed", "11", "--out", str(tmp_path / "o")]) == 0
    assert "seed=11" in capsys.readouterr().out


def test_validate_config_verb(tmp_path, capsys):
    good = write_config(tmp_path, TINY, "good.json")
    assert main(["validate-config", good]) == 0
    assert "config OK" in capsys.readouterr().out

    bad = write_config(tmp_path, {"policy": "warp"}, "bad.json")
    assert main(["validate-config", bad]) == 1
    err = capsys.readouterr().err
    assert "policy" in err


def test_missing_config_file_fails_cleanly(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json")]) == 1
    assert "not found" in capsys.readouterr().err


def test_train_then_eval_verb(tmp_path, capsys):
    cfg = write_config(tmp_path, DQL_TINY)
    model = tmp_path / "model.json"
    out = tmp_path / "out"
    code = main(
        ["train", cfg, "--episodes", "2", "--model-out", str(model), "--out", str(out)]
    )
    assert code == 0
    printed = capsys.readouterr().out
    assert f"model: {model}" in printed
    assert model.exists()
    assert json.loads(model.read_text())["format"] == "pqos-sim-qnet"
    assert (out / "training.csv").exists()


def test_eval_requires_model_for_dql(tmp_path, capsys):
    cfg = write_config(tmp_path, DQL_TINY)
    assert main(["eval", cfg]) == 1
    assert "--model" in capsys.readouterr().err


def test_eval_verb_reproduces_saved_policy(tmp_path, capsys):
    cfg = write_config(tmp_path, DQL_TINY)
    model = tmp_path / "model.json"
    assert main(["train", cfg, "--episodes", "1", "--model-out", str(model)]) == 0
    capsys.readouterr()
    assert main(["eval", cfg, "--model", str(model), "--out", str(tmp_path / "eval")]) == 0
    assert "policy=dql" in capsys.readouterr().out
    summary = json.loads((tmp_path / "eval" / "summary.json").read_text())
    assert summary["agent"]["gradient_steps"] == 0  # exploration and learning off
    assert summary["agent"]["action_steps"] == 0


def test_figdata_verb_merges_runs(tmp_path, capsys):
    runs = []
    for i, policy in enumerate(("constant:C-R", "constant:C-SA")):
        payload = dict(TINY, policy=policy)
        cfg = write_config(tmp_path, payload, f"cfg{i}.json")
        out = tmp_path / f"run{i}"
        assert main(["run", cfg, "--out", str(out)]) == 0
        runs.append(str(out))
    capsys.readouterr()
    fig = tmp_path / "fig"
    assert main(["figdata", *runs, "--out", str(fig)]) == 0
    printed = capsys.readouterr().out
    assert "delays:" in printed and "prr:" in printed
    delays = (fig / "delays.csv").read_text().splitlines()
    assert {line.split(",")[0] for line in delays[1:]} == {"constant:C-R", "constant:C-SA"}


def test_unknown_verb_exits_with_usage(capsys):
    with pytest.raises(SystemExit):
        main(["transmogrify"])
    assert "invalid choice" in capsys.readouterr().err
