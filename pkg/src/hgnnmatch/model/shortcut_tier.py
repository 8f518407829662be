"""
One round of mean message passing over random-walk shortcut edges, used only to time the
shortcut tier against a hierarchical round on the same device.
"""

import logging
import time
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from hgnnmatch.autodiff import ops
from hgnnmatch.autodiff.tensor import Tensor, constant
from hgnnmatch.errors import ShapeError
from hgnnmatch.graph.builder import HierGraph
from hgnnmatch.graph.shortcut import ShortcutGraph
from hgnnmatch.model.hgnn import coarse_update, fine_hetero_update

logger = logging.getLogger(__name__)


def shortcut_message_round(s: ShortcutGraph, X: Tensor, W: Tensor) -> Tensor:
    """x_i <- mean(x_i, mean over shortcut neighbours j of x_j W); isolated nodes keep x_i W."""
    m = s.base.m
    if X.ndim != 2 or X.shape[0] != m:
        raise ShapeError(f"shortcut_message_round: features {X.shape} do not align with {m} nodes")

    # edge messages in both directions plus a self message per node
    src = [a for a, b in s.shortcut_edges] + [b for a, b in s.shortcut_edges] + list(range(m))
    dst = [b for a, b in s.shortcut_edges] + [a for a, b in s.shortcut_edges] + list(range(m))
    deg = np.bincount(dst, minlength=m).astype(np.float64)
    scatter = np.zeros((m, len(dst)))
    scatter[dst, np.arange(len(dst))] = 1.0 / deg[dst]

    messages = ops.gather_rows(ops.matmul(X, W), src)
    return ops.scale(ops.add(X, ops.matmul(constant(scatter, like=X), messages)), 0.5)


@dataclass(frozen=True)
class TierTiming:
    hierarchical_s: float
    shortcut_s: float

    @property
    def ratio(self) -> float:
        return self.shortcut_s / self.hierarchical_s if self.hierarchical_s > 0 else float("nan")


def time_tier_rounds(
    g: HierGraph, s: ShortcutGraph, X: Tensor, hetero: Mapping[str, Tensor], repeats: int = 3
) -> TierTiming:
    """Best-of-`repeats` wall time of one hierarchical round vs one shortcut round."""
    best_h = best_s = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fine_hetero_update(g, X, coarse_update(g, X, hetero["W1"]), hetero)
        t1 = time.perf_counter()
        shortcut_message_round(s, X, hetero["W1"])
        t2 = time.perf_counter()
        best_h = min(best_h, t1 - t0)
        best_s = min(best_s, t2 - t1)
    return TierTiming(hierarchical_s=best_h, shortcut_s=best_s)
