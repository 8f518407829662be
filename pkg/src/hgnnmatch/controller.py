import json
import logging
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.autodiff.tensor import constant
from hgnnmatch.config.utils import RunConfig, rng_stream
from hgnnmatch.data.pairs import PairExample, read_pairs, sample_pairs, split_users, write_pairs, write_users
from hgnnmatch.data.synth import SynthConfig, generate_corpus
from hgnnmatch.errors import DataError, UsageError
from hgnnmatch.graph.builder import HierGraph, build_hier_graph, build_hier_graphs
from hgnnmatch.graph.logs import DeviceLog, load_logs, write_logs
from hgnnmatch.graph.shortcut import build_shortcut_graph
from hgnnmatch.graph.stats import graph_stats, stats_frame, write_graph_dump
from hgnnmatch.model.config import ModelConfig
from hgnnmatch.model.matcher import Matcher
from hgnnmatch.model.shortcut_tier import time_tier_rounds
from hgnnmatch.training.evaluation import evaluate_threshold_sweep, score_pairs, write_eval_outputs
from hgnnmatch.training.optimizers import OptimizerConfig
from hgnnmatch.training.trainer import PairDataset, train

logger = logging.getLogger(__name__)

Artifacts = dict[str, Path]


def _require(run: RunConfig, key: str) -> Path:
    value = run[key]
    if not value:
        raise UsageError(f"{run.command} needs --{key.replace('_', '-')}")
    return Path(value)


def _max_token(logs: Sequence[DeviceLog]) -> int:
    return max((t for log in logs for ev in log.events for t in ev.tokens), default=-1)


def _graphs_for(logs: Sequence[DeviceLog], pairs: Sequence[PairExample], K: int, threads: int) -> dict[str, HierGraph]:
    return PairDataset.from_logs(logs, pairs, K, threads).graphs


def _load_matcher(run: RunConfig, logs: Sequence[DeviceLog]) -> Matcher:
    matcher = Matcher.load(_require(run, "checkpoint"))
    top = _max_token(logs)
    if top >= matcher.cfg.vocab_size:
        raise DataError(f"Logs use token id {top} but the model vocabulary has {matcher.cfg.vocab_size} entries")
    return matcher


def _pairs_or_empty(logs: Sequence[DeviceLog], users: dict[str, str], run: RunConfig) -> list[PairExample]:
    if len(logs) < 2:
        return []
    try:
        return sample_pairs(logs, users, run["neg_ratio"], run.seed)
    except ValueError as err:
        logger.warning("No pairs sampled: %s", err)
        return []


# ---------- Subcommands ----------
def gen_data(run: RunConfig) -> Artifacts:
    cfg = SynthConfig(
        n_users=run["users"],
        devices_per_user=run["devices_per_user"],
        mean_log_len=run["mean_log_len"],
        vocab_size=run["vocab"],
        profile_dim=run["profile_dim"],
        noise=run["noise"],
        seed=run.seed,
    )
    logs, users = generate_corpus(cfg)
    kept, held_out = split_users(users, run["test_fraction"], run.seed)
    train_logs = [log for log in logs if users[log.device_id] in kept]
    test_logs = [log for log in logs if users[log.device_id] in held_out]

    out = run.out_dir
    return {
        "logs": write_logs(logs, out / "logs.jsonl"),
        "users": write_users(users, out / "users.csv"),
        "pairs": write_pairs(_pairs_or_empty(train_logs, users, run), out / "pairs.csv"),
        "test_pairs": write_pairs(_pairs_or_empty(test_logs, users, run), out / "test_pairs.csv"),
    }


def build_graph(run: RunConfig) -> Artifacts:
    logs = load_logs(_require(run, "logs"))
    graphs = build_hier_graphs(logs, run["K"], run["threads"])
    ids = list(graphs)
    stats_path = run.out_dir / "graph_stats.csv"
    stats_frame(ids, [graph_stats(g) for g in graphs.values()]).to_csv(stats_path, index=False)
    return {"graphs": write_graph_dump(ids, list(graphs.values()), run.out_dir / "graphs.jsonl"), "stats": stats_path}


def train_model(run: RunConfig) -> Artifacts:
    logs = load_logs(_require(run, "logs"))
    pairs = read_pairs(_require(run, "pairs"))
    cfg = ModelConfig(
        vocab_size=max(run["vocab"], _max_token(logs) + 1),
        K=run["K"],
        d=run["dim"],
        fine_rounds=run["fine_rounds"],
        hetero_rounds=run["hetero_rounds"],
        dropout=run["dropout"],
        pool_dim=run["pool_dim"],
        head=run["head"],
        cross_score=run["cross_score"],
        seed=run.seed,
    )
    opt = OptimizerConfig(name=run["optimizer"], lr=run["lr"], batch_size=run["batch"], epochs=run["epochs"])
    dataset = PairDataset.from_logs(logs, pairs, cfg.K, run["threads"])
    result = train(dataset, cfg, opt, threads=run["threads"])
    return result.write(run.out_dir)


def eval_model(run: RunConfig) -> Artifacts:
    logs = load_logs(_require(run, "logs"))
    pairs = read_pairs(_require(run, "pairs"))
    matcher = _load_matcher(run, logs)
    graphs = _graphs_for(logs, pairs, matcher.cfg.K, run["threads"])
    report = evaluate_threshold_sweep(matcher, graphs, pairs, run["threads"])
    return write_eval_outputs(report, run.out_dir)


def score_pair_file(run: RunConfig) -> Artifacts:
    logs = load_logs(_require(run, "logs"))
    pairs = read_pairs(_require(run, "pairs"))
    matcher = _load_matcher(run, logs)
    graphs = _graphs_for(logs, pairs, matcher.cfg.K, run["threads"])
    scores = score_pairs(matcher, graphs, pairs, run["threads"], symmetric=bool(run["symmetric"]))

    path = run.out_dir / "scores.csv"
    df = pd.DataFrame({"device_a": [p.device_a for p in pairs], "device_b": [p.device_b for p in pairs]})
    df["score"] = scores
    df.to_csv(path, index=False)
    return {"scores": path}


def compare_tiers(run: RunConfig) -> Artifacts:
    """Membership vs shortcut edge counts per device; one timed round of each tier is informational."""
    logs = load_logs(_require(run, "logs"))
    if not logs:
        raise DataError("compare-tiers needs at least one device log")

    d = run["dim"]
    weights = ParamStore(seed=run.seed)
    for name in ("W1", "W2", "W3"):
        weights.add_weight(name, (d, d))
    feature_rng = rng_stream(run.seed, "init", 1)

    ids, reports, timings = [], [], []
    for k, log in enumerate(logs):
        g = build_hier_graph(log, run["K"])
        walk_seed = int(rng_stream(run.seed, "walks", k).integers(2**62))
        s = build_shortcut_graph(g, run["walk_len"], run["walks_per_node"], seed=walk_seed)
        ids.append(log.device_id)
        reports.append(graph_stats(g, s))
        X = constant(feature_rng.standard_normal((g.m, d)))
        timings.append(time_tier_rounds(g, s, X, weights.entries))

    df = stats_frame(ids, reports)
    stats_path = run.out_dir / "tier_stats.csv"
    df.to_csv(stats_path, index=False)

    hier_s = sum(t.hierarchical_s for t in timings)
    short_s = sum(t.shortcut_s for t in timings)
    summary = {
        "devices": len(ids),
        "K": run["K"],
        "walk_length": run["walk_len"],
        "walks_per_node": run["walks_per_node"],
        "mean_membership_edges": float(df["membership_edges"].mean()),
        "mean_shortcut_edges": float(df["shortcut_edges"].mean()),
        "mean_shortcut_to_membership": float(np.nanmean(df["shortcut_to_membership"].to_numpy(dtype=float))),
        "membership_within_seq_len": bool((df["membership_edges"] <= df["seq_len"]).all()),
        "hierarchical_round_s": hier_s,
        "shortcut_round_s": short_s,
        "time_ratio": short_s / hier_s if hier_s > 0 else None,
    }
    summary_path = run.out_dir / "tier_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2), encoding="utf-8")
    logger.info(
        "Tier comparison over %d devices: shortcut/membership edges %.2f, time ratio %s",
        len(ids),
        summary["mean_shortcut_to_membership"],
        summary["time_ratio"],
    )
    return {"stats": stats_path, "summary": summary_path}


_HANDLERS: dict[str, Callable[[RunConfig], Artifacts]] = {
    "gen-data": gen_data,
    "build-graph": build_graph,
    "train": train_model,
    "eval": eval_model,
    "score-pairs": score_pair_file,
    "compare-tiers": compare_tiers,
}
COMMANDS = tuple(_HANDLERS)


class Controller:
    def __init__(self, run: RunConfig):
        self.run = run
        try:
            self.handler = _HANDLERS[run.command]
        except KeyError as err:
            raise UsageError(f"Unsupported command: {run.command!r}. Supported: {list(_HANDLERS)}") from err

    def __call__(self) -> Artifacts:
        logger.info("Controller: received command %r (out=%s)", self.run.command, self.run.out_dir)
        try:
            snapshot = self.run.write()
            artifacts = self.handler(self.run)
            artifacts["run_config"] = snapshot
            for name, path in artifacts.items():
                logger.info("Wrote %s: %s", name, path)
            return artifacts
        except Exception as e:
            logger.exception("Controller encountered an error: %s", e)
            raise
