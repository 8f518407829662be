"""
Threshold-sweep evaluation: a pair is predicted positive when its score >= threshold, thresholds
run 0.00..1.00 in steps of 0.01. Precision is 0 when nothing is predicted positive, recall is 0
when there are no positives, and F1 is 0 when P + R = 0. The best F1 is the first maximum.
"""

import json
import logging
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from hgnnmatch.config import config
from hgnnmatch.data.pairs import PairExample, labels_of
from hgnnmatch.graph.builder import HierGraph
from hgnnmatch.model.matcher import Matcher

logger = logging.getLogger(__name__)

THRESHOLDS = np.round(np.arange(config.N_THRESHOLDS) * config.THRESHOLD_STEP, 2)
SWEEP_COLUMNS = ["threshold", "precision", "recall", "f1"]


@dataclass(frozen=True)
class EvalReport:
    sweep: pd.DataFrame  # one row per threshold, SWEEP_COLUMNS
    best_f1: float
    best_threshold: float

    @property
    def pr_curve(self) -> list[tuple[float, float]]:
        """(recall, precision) per threshold, ordered by recall; ties keep threshold order."""
        ordered = self.sweep.sort_values("recall", kind="stable")
        return list(zip(ordered["recall"].tolist(), ordered["precision"].tolist(), strict=True))

    def summary(self) -> dict:
        return {"best_f1": self.best_f1, "best_threshold": self.best_threshold, "n_thresholds": len(self.sweep)}


def sweep_scores(scores, labels, thresholds: np.ndarray = THRESHOLDS) -> EvalReport:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size == 0:
        raise ValueError("Cannot evaluate an empty test set")
    if scores.shape != labels.shape:
        raise ValueError(f"scores {scores.shape} and labels {labels.shape} differ in length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("Labels must be 0 or 1")
    if labels.min() == labels.max():
        logger.warning("Test labels are all %d; precision/recall are degenerate", int(labels[0]))

    positive = labels.astype(bool)
    predicted = scores[None, :] >= np.asarray(thresholds, dtype=np.float64)[:, None]
    tp = (predicted & positive).sum(axis=1)
    fp = (predicted & ~positive).sum(axis=1)
    fn = (~predicted & positive).sum(axis=1)

    precision = np.divide(tp, tp + fp, out=np.zeros(len(tp)), where=(tp + fp) > 0)
    recall = np.divide(tp, tp + fn, out=np.zeros(len(tp)), where=(tp + fn) > 0)
    pr_sum = precision + recall
    f1 = np.divide(2.0 * precision * recall, pr_sum, out=np.zeros(len(tp)), where=pr_sum > 0)

    sweep = pd.DataFrame({"threshold": thresholds, "precision": precision, "recall": recall, "f1": f1})
    best = int(np.argmax(f1))
    return EvalReport(sweep=sweep, best_f1=float(f1[best]), best_threshold=float(sweep["threshold"].iloc[best]))


def score_pairs(
    matcher: Matcher,
    graphs: Mapping[str, HierGraph],
    pairs: Sequence[PairExample],
    threads: int = 1,
    symmetric: bool = False,
) -> np.ndarray:
    """Inference scores in pair order. Each device is encoded once; work may fan out over threads."""
    devices = list(dict.fromkeys(d for p in pairs for d in (p.device_a, p.device_b)))
    missing = [d for d in devices if d not in graphs]
    if missing:
        raise KeyError(f"No graph for devices {missing[:5]}")

    def _encode(device: str):
        return matcher.encode(graphs[device]).X

    def _score(p: PairExample) -> float:
        return matcher.score_encoded(encoded[p.device_a], encoded[p.device_b], symmetric)

    if threads <= 1:
        encoded = {d: _encode(d) for d in devices}
        return np.asarray([_score(p) for p in pairs], dtype=np.float64)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        encoded = dict(zip(devices, pool.map(_encode, devices), strict=True))
        return np.asarray(list(pool.map(_score, pairs)), dtype=np.float64)


def evaluate_threshold_sweep(
    matcher: Matcher, graphs: Mapping[str, HierGraph], pairs: Sequence[PairExample], threads: int = 1
) -> EvalReport:
    if not pairs:
        raise ValueError("Cannot evaluate an empty test set")
    report = sweep_scores(score_pairs(matcher, graphs, pairs, threads), labels_of(pairs))
    logger.info("Best F1 %.4f at threshold %.2f over %d pairs", report.best_f1, report.best_threshold, len(pairs))
    return report


# ---------- Export ----------
def pr_curve_export(report: EvalReport, path: Path) -> tuple[Path, Path]:
    """Writes recall,precision to `path` and threshold,f1 to f1_threshold.csv beside it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(report.pr_curve, columns=["recall", "precision"]).to_csv(path, index=False)
    f1_path = path.with_name("f1_threshold.csv")
    report.sweep[["threshold", "f1"]].to_csv(f1_path, index=False)
    return path, f1_path


def read_pr_curve(path: Path) -> list[tuple[float, float]]:
    df = pd.read_csv(path)
    return list(zip(df["recall"].tolist(), df["precision"].tolist(), strict=True))


def write_eval_outputs(report: EvalReport, out_dir: Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep_path = out_dir / "eval_sweep.csv"
    report.sweep[SWEEP_COLUMNS].to_csv(sweep_path, index=False)
    pr_path, f1_path = pr_curve_export(report, out_dir / "pr_curve.csv")
    summary_path = out_dir / "eval_summary.json"
    summary_path.write_text(json.dumps(report.summary(), indent=2), encoding="utf-8")
    return {"sweep": sweep_path, "pr_curve": pr_path, "f1_threshold": f1_path, "summary": summary_path}
