import json
import logging
import shutil
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from hgnnmatch import controller
from hgnnmatch.autodiff.checkpoint import load_checkpoint, save_checkpoint
from hgnnmatch.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, dispatch
from hgnnmatch.errors import NumericalAbort
from hgnnmatch.graph.logs import load_logs

pytestmark = pytest.mark.integration

TINY_DATA = ["--users", "8", "--mean-log-len", "15", "--vocab", "30", "--profile-dim", "5", "--test-fraction", "0.25"]
TINY_MODEL = ["--dim", "6", "--pool-dim", "5", "--epochs", "1", "--batch", "8"]


@pytest.fixture(scope="module")
def runs(tmp_path_factory) -> Path:
    """gen-data then train once; the other subcommands reuse the outputs."""
    root = tmp_path_factory.mktemp("cli")
    assert dispatch(["gen-data", "--seed", "5", "--out", str(root / "data"), *TINY_DATA]) == EXIT_OK
    data = root / "data"
    code = dispatch(
        ["train", "--seed", "5", "--logs", str(data / "logs.jsonl"), "--pairs", str(data / "pairs.csv")]
        + TINY_MODEL
        + ["--out", str(root / "train")]
    )
    assert code == EXIT_OK
    return root


def test_gen_data_outputs(runs):
    data = runs / "data"
    for name in ("logs.jsonl", "users.csv", "pairs.csv", "test_pairs.csv", "run_config.json"):
        assert (data / name).exists(), name
    assert len(load_logs(data / "logs.jsonl")) == 16
    snapshot = json.loads((data / "run_config.json").read_text())
    assert snapshot["command"] == "gen-data"
    assert snapshot["settings"]["users"] == 8
    assert snapshot["settings"]["seed"] == 5

    train_devices = set(pd.read_csv(data / "pairs.csv")[["device_a", "device_b"]].to_numpy().ravel())
    test_devices = set(pd.read_csv(data / "test_pairs.csv")[["device_a", "device_b"]].to_numpy().ravel())
    assert test_devices
    assert not train_devices & test_devices


def test_gen_data_is_reproducible_from_its_snapshot(runs, tmp_path):
    data = runs / "data"
    code = dispatch(["gen-data", "--config", str(data / "run_config.json"), "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "logs.jsonl").read_bytes() == (data / "logs.jsonl").read_bytes()
    assert (tmp_path / "pairs.csv").read_bytes() == (data / "pairs.csv").read_bytes()


def test_build_graph(runs, tmp_path):
    code = dispatch(["build-graph", "--logs", str(runs / "data" / "logs.jsonl"), "--K", "3", "--out", str(tmp_path)])
    assert code == EXIT_OK
    stats = pd.read_csv(tmp_path / "graph_stats.csv")
    assert len(stats) == 16
    assert (stats["coarse_nodes"] == np.ceil(stats["seq_len"] / 3)).all()
    dumps = [json.loads(line) for line in (tmp_path / "graphs.jsonl").read_text().splitlines()]
    assert dumps[0]["device_id"] == stats["device_id"][0]
    assert dumps[0]["K"] == 3


def test_train_outputs(runs):
    train_dir = runs / "train"
    for name in ("model.ckpt", "model_config.json", "loss_history.csv", "val_history.csv", "run_config.json"):
        assert (train_dir / name).exists(), name
    history = pd.read_csv(train_dir / "loss_history.csv")
    assert len(history) == 1
    assert np.isfinite(history["mean_loss"]).all()
    assert json.loads((train_dir / "model_config.json").read_text())["d"] == 6


def test_eval(runs, tmp_path):
    data = runs / "data"
    code = dispatch(
        ["eval", "--logs", str(data / "logs.jsonl"), "--pairs", str(data / "test_pairs.csv")]
        + ["--checkpoint", str(runs / "train"), "--out", str(tmp_path)]
    )
    assert code == EXIT_OK
    sweep = pd.read_csv(tmp_path / "eval_sweep.csv")
    assert len(sweep) == 101
    summary = json.loads((tmp_path / "eval_summary.json").read_text())
    assert summary["best_f1"] == pytest.approx(sweep["f1"].max())
    assert (tmp_path / "pr_curve.csv").read_text().startswith("recall,precision")


@pytest.mark.parametrize("symmetric", [False, True])
def test_score_pairs(runs, tmp_path, symmetric):
    data = runs / "data"
    argv = ["score-pairs", "--logs", str(data / "logs.jsonl"), "--pairs", str(data / "test_pairs.csv")]
    argv += ["--checkpoint", str(runs / "train" / "model.ckpt"), "--out", str(tmp_path)]
    assert dispatch(argv + (["--symmetric"] if symmetric else [])) == EXIT_OK

    scores = pd.read_csv(tmp_path / "scores.csv")
    assert scores.columns.tolist() == ["device_a", "device_b", "score"]
    assert len(scores) == len(pd.read_csv(data / "test_pairs.csv"))
    assert ((scores["score"] > 0) & (scores["score"] < 1)).all()


def test_compare_tiers(runs, tmp_path):
    logs = str(runs / "data" / "logs.jsonl")
    code = dispatch(["compare-tiers", "--logs", logs, "--dim", "4", "--out", str(tmp_path)])
    assert code == EXIT_OK
    stats = pd.read_csv(tmp_path / "tier_stats.csv")
    assert len(stats) == 16
    assert (stats["membership_edges"] <= stats["seq_len"]).all()
    summary = json.loads((tmp_path / "tier_summary.json").read_text())
    assert summary["membership_within_seq_len"] is True
    assert summary["walk_length"] == 4
    assert summary["devices"] == 16


# ---------- Exit codes ----------
@pytest.mark.parametrize(
    "argv",
    [
        ["explode"],
        ["train", "--no-such-flag", "1"],
        ["train", "--epochs", "many"],
        [],
    ],
    ids=["unknown-command", "unknown-flag", "bad-value", "no-command"],
)
def test_usage_errors_exit_1(argv):
    assert dispatch(argv) == EXIT_USAGE


def test_missing_required_input_exits_1(tmp_path):
    assert dispatch(["build-graph", "--out", str(tmp_path)]) == EXIT_USAGE


def test_invalid_settings_exit_1(runs, tmp_path):
    data = runs / "data"
    argv = ["train", "--logs", str(data / "logs.jsonl"), "--pairs", str(data / "pairs.csv")]
    assert dispatch(argv + ["--head", "bilinear", "--out", str(tmp_path)]) == EXIT_USAGE


def test_unknown_config_key_exits_1(tmp_path):
    cfg = tmp_path / "settings.json"
    cfg.write_text(json.dumps({"learning_rate": 0.1}), encoding="utf-8")
    assert dispatch(["gen-data", "--config", str(cfg), "--out", str(tmp_path / "out")]) == EXIT_USAGE


def test_missing_log_file_exits_2(tmp_path):
    assert dispatch(["build-graph", "--logs", str(tmp_path / "absent.jsonl"), "--out", str(tmp_path)]) == EXIT_DATA


def test_malformed_log_exits_2(tmp_path):
    logs = tmp_path / "logs.jsonl"
    logs.write_text('{"device_id": "a", "events": []}\n', encoding="utf-8")
    assert dispatch(["build-graph", "--logs", str(logs), "--out", str(tmp_path / "out")]) == EXIT_DATA


def test_numerical_abort_exits_3(runs, tmp_path, monkeypatch):
    def diverge(*args, **kwargs):
        raise NumericalAbort("Non-finite loss nan at epoch 1, batch 0")

    monkeypatch.setattr(controller, "train", diverge)
    data = runs / "data"
    argv = ["train", "--logs", str(data / "logs.jsonl"), "--pairs", str(data / "pairs.csv"), "--out", str(tmp_path)]
    assert dispatch(argv) == EXIT_NUMERICAL


def test_train_and_eval_are_reproducible_from_the_train_snapshot(runs, tmp_path):
    data = runs / "data"
    code = dispatch(["train", "--config", str(runs / "train" / "run_config.json"), "--out", str(tmp_path / "train")])
    assert code == EXIT_OK
    assert (tmp_path / "train" / "model.ckpt").read_bytes() == (runs / "train" / "model.ckpt").read_bytes()

    evals = []
    for name in ("first", "second"):
        checkpoint = runs / "train" if name == "first" else tmp_path / "train"
        argv = ["eval", "--logs", str(data / "logs.jsonl"), "--pairs", str(data / "test_pairs.csv")]
        assert dispatch(argv + ["--checkpoint", str(checkpoint), "--out", str(tmp_path / name)]) == EXIT_OK
        evals.append(tmp_path / name)
    for output in ("eval_sweep.csv", "pr_curve.csv"):
        assert (evals[0] / output).read_bytes() == (evals[1] / output).read_bytes()


@pytest.mark.parametrize("command", ["eval", "score-pairs"])
def test_non_finite_checkpoint_exits_3(runs, tmp_path, command):
    broken = tmp_path / "broken"
    shutil.copytree(runs / "train", broken)
    store = load_checkpoint(broken / "model.ckpt")
    for name in store:
        store[name].values[...] = np.nan
    save_checkpoint(store, broken / "model.ckpt")

    data = runs / "data"
    checkpoint = broken if command == "eval" else broken / "model.ckpt"
    argv = [command, "--logs", str(data / "logs.jsonl"), "--pairs", str(data / "test_pairs.csv")]
    assert dispatch(argv + ["--checkpoint", str(checkpoint), "--out", str(tmp_path / "out")]) == EXIT_NUMERICAL


def test_help_exits_0(capsys):
    assert dispatch(["train", "--help"]) == EXIT_OK
    assert "--walk-len" in capsys.readouterr().out


# ---------- Configuration ----------
def test_flag_wins_over_config_file_with_warning(tmp_path, caplog):
    cfg = tmp_path / "settings.json"
    cfg.write_text(json.dumps({"seed": 3, "users": 3, "mean_log_len": 10, "vocab": 20, "profile_dim": 4}))
    out = tmp_path / "out"
    with caplog.at_level(logging.WARNING):
        assert dispatch(["gen-data", "--config", str(cfg), "--seed", "4", "--out", str(out)]) == EXIT_OK
    assert "Config conflict for 'seed'" in caplog.text
    settings = json.loads((out / "run_config.json").read_text())["settings"]
    assert settings["seed"] == 4
    assert settings["users"] == 3


def test_run_config_is_written_before_the_handler_runs(tmp_path):
    out = tmp_path / "out"
    argv = ["train", "--logs", str(tmp_path / "absent.jsonl"), "--pairs", "x.csv", "--out", str(out)]
    assert dispatch(argv) == EXIT_DATA
    assert json.loads((out / "run_config.json").read_text())["command"] == "train"
