"""
Hierarchical heterogeneous device graph.

Fine level: one node per distinct URL key (first-appearance order), a directed edge for every
distinct consecutive transition (a repeated URL gives a self-loop), and for each node the ordered
list of distinct in-neighbors by first transition into it.

Coarse level: the raw sequence is cut into consecutive subgroups of K positions (the last may be
shorter); each subgroup is a coarse node linked to the distinct fine nodes it covers.
"""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

from hgnnmatch.errors import DataError
from hgnnmatch.graph.logs import DeviceLog, UrlKey

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


@dataclass(frozen=True)
class FineGraph:
    fine_nodes: tuple[UrlKey, ...]
    fine_edges: tuple[Edge, ...]
    in_neighbors: tuple[tuple[int, ...], ...]

    @property
    def m(self) -> int:
        return len(self.fine_nodes)

    @cached_property
    def out_neighbors(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.m)]
        for src, dst in self.fine_edges:
            out[src].append(dst)
        return tuple(tuple(sorted(nbrs)) for nbrs in out)


@dataclass(frozen=True)
class HierGraph:
    fine: FineGraph
    positions: tuple[int, ...]  # fine node index of every sequence position
    coarse_count: int
    membership: tuple[tuple[int, ...], ...]  # coarse j -> sorted member fine indices
    coarse_of: tuple[tuple[int, ...], ...]  # fine i -> sorted coarse indices
    K: int

    @property
    def fine_nodes(self) -> tuple[UrlKey, ...]:
        return self.fine.fine_nodes

    @property
    def fine_edges(self) -> tuple[Edge, ...]:
        return self.fine.fine_edges

    @property
    def in_neighbors(self) -> tuple[tuple[int, ...], ...]:
        return self.fine.in_neighbors

    @property
    def m(self) -> int:
        return self.fine.m

    @property
    def seq_len(self) -> int:
        return len(self.positions)

    @property
    def membership_edge_count(self) -> int:
        return sum(len(members) for members in self.membership)

    def to_json(self) -> dict:
        return {
            "fine_nodes": [list(k) for k in self.fine_nodes],
            "fine_edges": [list(e) for e in self.fine_edges],
            "in_neighbors": [list(n) for n in self.in_neighbors],
            "coarse_count": self.coarse_count,
            "membership": [list(m) for m in self.membership],
            "coarse_of": [list(c) for c in self.coarse_of],
            "seq_len": self.seq_len,
            "K": self.K,
        }


def build_fine_graph(log: DeviceLog) -> FineGraph:
    keys = log.url_keys()
    if not keys:
        raise DataError(f"Device {log.device_id!r} has an empty log")

    index: dict[UrlKey, int] = {}
    positions = [index.setdefault(key, len(index)) for key in keys]

    edges: list[Edge] = []
    seen: set[Edge] = set()
    in_neighbors: list[list[int]] = [[] for _ in index]
    for src, dst in zip(positions, positions[1:], strict=False):
        if (src, dst) in seen:
            continue
        seen.add((src, dst))
        edges.append((src, dst))
        in_neighbors[dst].append(src)

    return FineGraph(
        fine_nodes=tuple(index),
        fine_edges=tuple(edges),
        in_neighbors=tuple(tuple(n) for n in in_neighbors),
    )


def build_coarse_level(fine: FineGraph, log: DeviceLog, K: int) -> HierGraph:
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")

    node_of = {key: i for i, key in enumerate(fine.fine_nodes)}
    try:
        positions = tuple(node_of[key] for key in log.url_keys())
    except KeyError as err:
        raise ValueError(f"Log {log.device_id!r} holds a URL absent from the fine graph: {err.args[0]}") from err

    n = len(positions)
    coarse_count = math.ceil(n / K)
    membership = tuple(tuple(sorted(set(positions[j * K : (j + 1) * K]))) for j in range(coarse_count))

    coarse_of: list[list[int]] = [[] for _ in range(fine.m)]
    for j, members in enumerate(membership):
        for i in members:
            coarse_of[i].append(j)

    return HierGraph(
        fine=fine,
        positions=positions,
        coarse_count=coarse_count,
        membership=membership,
        coarse_of=tuple(tuple(c) for c in coarse_of),
        K=K,
    )


def build_hier_graph(log: DeviceLog, K: int) -> HierGraph:
    return build_coarse_level(build_fine_graph(log), log, K)


def build_hier_graphs(logs: Sequence[DeviceLog], K: int, threads: int = 1) -> dict[str, HierGraph]:
    """One HierGraph per log, keyed by device id in input order; building may fan out over threads."""
    if threads <= 1:
        return {log.device_id: build_hier_graph(log, K) for log in logs}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        graphs = list(pool.map(lambda log: build_hier_graph(log, K), logs))
    return {log.device_id: g for log, g in zip(logs, graphs, strict=True)}
