"""Random-walk shortcut tier: each node is linked to every node its walks visit (undirected)."""

import logging
from dataclasses import dataclass

import numpy as np

from hgnnmatch.config import config
from hgnnmatch.graph.builder import Edge, FineGraph, HierGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShortcutGraph:
    base: FineGraph
    shortcut_edges: tuple[Edge, ...]  # (lo, hi) node pairs, sorted
    walk_length: int
    walks_per_node: int
    rng_seed: int

    @property
    def edge_count(self) -> int:
        return len(self.shortcut_edges)


def build_shortcut_graph(
    fine: FineGraph | HierGraph,
    walk_length: int = config.DEFAULT_WALK_LENGTH,
    walks_per_node: int = config.DEFAULT_WALKS_PER_NODE,
    seed: int = 0,
) -> ShortcutGraph:
    base = fine.fine if isinstance(fine, HierGraph) else fine
    if walk_length < 1:
        raise ValueError(f"walk_length must be >= 1, got {walk_length}")
    if walks_per_node < 0:
        raise ValueError(f"walks_per_node must be >= 0, got {walks_per_node}")
    if base.m == 0:
        raise ValueError("Cannot walk an empty fine graph")

    rng = np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)
    out_nb = base.out_neighbors
    edges: set[Edge] = set()

    for start in range(base.m):
        for _ in range(walks_per_node):
            cur = start
            for _ in range(walk_length):
                nbrs = out_nb[cur]
                if not nbrs:  # dead end
                    break
                cur = nbrs[int(rng.integers(len(nbrs)))]
                if cur != start:
                    edges.add((min(start, cur), max(start, cur)))

    return ShortcutGraph(
        base=base,
        shortcut_edges=tuple(sorted(edges)),
        walk_length=walk_length,
        walks_per_node=walks_per_node,
        rng_seed=int(seed),
    )
