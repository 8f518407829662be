import logging
import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from hgnnmatch.autodiff import ops
from hgnnmatch.autodiff.tensor import Tape, backward
from hgnnmatch.config import config
from hgnnmatch.config.utils import rng_stream
from hgnnmatch.data.pairs import PairExample, check_pairs_resolve, labels_of, sample_pairs, user_components
from hgnnmatch.errors import NumericalAbort
from hgnnmatch.graph.builder import HierGraph, build_hier_graphs
from hgnnmatch.graph.logs import DeviceLog
from hgnnmatch.model.config import ModelConfig
from hgnnmatch.model.matcher import Matcher
from hgnnmatch.training.evaluation import evaluate_threshold_sweep
from hgnnmatch.training.loss import bce_loss
from hgnnmatch.training.optimizers import Optimizer, OptimizerConfig, get_optimizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairDataset:
    graphs: dict[str, HierGraph]
    pairs: list[PairExample]

    @classmethod
    def from_logs(cls, logs: Sequence[DeviceLog], pairs: Sequence[PairExample], K: int, threads: int = 1):
        """Builds graphs only for devices the pairs reference."""
        check_pairs_resolve(pairs, (log.device_id for log in logs))
        used = {d for p in pairs for d in (p.device_a, p.device_b)}
        graphs = build_hier_graphs([log for log in logs if log.device_id in used], K, threads)
        return cls(graphs=graphs, pairs=list(pairs))


@dataclass(frozen=True)
class TrainResult:
    matcher: Matcher
    loss_history: pd.DataFrame  # epoch, mean_loss
    val_history: pd.DataFrame  # epoch, best_f1, best_threshold

    def write(self, out_dir: Path) -> dict[str, Path]:
        out_dir = Path(out_dir)
        ckpt = self.matcher.save(out_dir)
        loss_path = out_dir / "loss_history.csv"
        self.loss_history.to_csv(loss_path, index=False)
        val_path = out_dir / "val_history.csv"
        self.val_history.to_csv(val_path, index=False)
        return {"checkpoint": ckpt, "loss_history": loss_path, "val_history": val_path}


def split_validation(
    pairs: Sequence[PairExample], fraction: float, seed: int
) -> tuple[list[PairExample], list[PairExample]]:
    """
    Hold out ceil(fraction * users) users (at least two when possible), a user being a connected
    component of positive pairs. Pairs touching a held-out user leave the training split; the
    validation split is every held-out positive plus as many negatives drawn among held-out devices.
    """
    if fraction <= 0:
        return list(pairs), []
    component = user_components(pairs)
    sizes = Counter(component.values())
    matched = sorted(u for u, size in sizes.items() if size > 1)
    if len(matched) < 2:
        return list(pairs), []

    n_val = min(max(math.ceil(fraction * len(matched)), 2), len(matched) - 1)
    order = rng_stream(seed, "split").permutation(len(matched))
    held = {matched[k] for k in order[:n_val].tolist()}

    train = [p for p in pairs if component[p.device_a] not in held and component[p.device_b] not in held]
    val_devices = list(dict.fromkeys(d for p in pairs for d in (p.device_a, p.device_b) if component[d] in held))
    val = sample_pairs(val_devices, {d: str(component[d]) for d in val_devices}, neg_ratio=1.0, seed=seed)
    logger.info(
        "Validation split: %d users held out, %d/%d pairs (train/val), %d positive in val",
        n_val,
        len(train),
        len(val),
        sum(p.label for p in val),
    )
    return train, val


def _train_step(
    matcher: Matcher,
    graphs: dict[str, HierGraph],
    batch: Sequence[PairExample],
    optimizer: Optimizer,
    dropout_rng: np.random.Generator,
) -> float:
    params = matcher.params
    params.zero_grad()
    with Tape() as tape:
        devices = dict.fromkeys(d for p in batch for d in (p.device_a, p.device_b))
        encoded = {d: matcher.encode(graphs[d]).X for d in devices}
        total = None
        for p in batch:
            prob = matcher.forward(encoded[p.device_a], encoded[p.device_b], training=True, rng=dropout_rng)
            term = bce_loss(prob, p.label)
            total = term if total is None else ops.add(total, term)
        loss = ops.scale(total, 1.0 / len(batch))

    value = loss.item()
    if not math.isfinite(value):
        return value
    backward(loss, tape, params=params.tensors())
    optimizer.step(params)
    return value


def train(
    dataset: PairDataset,
    cfg: ModelConfig,
    opt: OptimizerConfig,
    validation_fraction: float = config.VALIDATION_FRACTION,
    threads: int = 1,
    matcher: Matcher | None = None,
) -> TrainResult:
    """`matcher` warm-starts from existing parameters; by default a fresh model is initialized from `cfg`."""
    if not dataset.pairs:
        raise ValueError("Cannot train on an empty pair set")

    train_pairs, val_pairs = split_validation(dataset.pairs, validation_fraction, cfg.seed)
    if not train_pairs:
        raise ValueError("The training split is empty")
    labels = labels_of(train_pairs)
    if labels.min() == labels.max():
        logger.warning("Training pairs hold a single class (label %d); proceeding anyway", int(labels[0]))

    matcher = matcher if matcher is not None else Matcher(cfg)
    optimizer = get_optimizer(opt)
    shuffle_rng = rng_stream(cfg.seed, "shuffle")
    dropout_rng = rng_stream(cfg.seed, "dropout")
    logger.info(
        "Training %s head: %d parameters, %d train pairs, %d epochs, batch %d, %s lr=%g",
        cfg.head,
        matcher.params.num_parameters(),
        len(train_pairs),
        opt.epochs,
        opt.batch_size,
        opt.name,
        opt.lr,
    )

    loss_rows, val_rows = [], []
    n = len(train_pairs)
    for epoch in range(1, opt.epochs + 1):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, opt.batch_size)):
            batch = [train_pairs[k] for k in order[start : start + opt.batch_size]]
            try:
                value = _train_step(matcher, dataset.graphs, batch, optimizer, dropout_rng)
            except FloatingPointError as err:
                raise NumericalAbort(f"Non-finite activations at epoch {epoch}, batch {b}: {err}") from err
            if not math.isfinite(value):
                raise NumericalAbort(f"Non-finite loss {value} at epoch {epoch}, batch {b}")
            logger.debug("epoch %d batch %d loss %.6f", epoch, b, value)
            total += value * len(batch)

        mean_loss = total / n
        loss_rows.append({"epoch": epoch, "mean_loss": mean_loss})
        if val_pairs:
            report = evaluate_threshold_sweep(matcher, dataset.graphs, val_pairs, threads)
            val_rows.append({"epoch": epoch, "best_f1": report.best_f1, "best_threshold": report.best_threshold})
            logger.info("Epoch %d: mean loss %.6f, validation F1 %.4f", epoch, mean_loss, report.best_f1)
        else:
            logger.info("Epoch %d: mean loss %.6f", epoch, mean_loss)

    return TrainResult(
        matcher=matcher,
        loss_history=pd.DataFrame(loss_rows, columns=["epoch", "mean_loss"]),
        val_history=pd.DataFrame(val_rows, columns=["epoch", "best_f1", "best_threshold"]),
    )
