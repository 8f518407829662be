import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import pandas as pd

from hgnnmatch.graph.builder import HierGraph
from hgnnmatch.graph.shortcut import ShortcutGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StatsReport:
    seq_len: int
    fine_nodes: int
    fine_edges: int
    coarse_nodes: int
    membership_edges: int
    shortcut_edges: int | None = None
    walk_length: int | None = None
    walks_per_node: int | None = None
    shortcut_to_membership: float | None = None

    def to_row(self) -> dict:
        return asdict(self)


def graph_stats(g: HierGraph, s: ShortcutGraph | None = None) -> StatsReport:
    membership = g.membership_edge_count
    if s is None:
        return StatsReport(g.seq_len, g.m, len(g.fine_edges), g.coarse_count, membership)
    return StatsReport(
        seq_len=g.seq_len,
        fine_nodes=g.m,
        fine_edges=len(g.fine_edges),
        coarse_nodes=g.coarse_count,
        membership_edges=membership,
        shortcut_edges=s.edge_count,
        walk_length=s.walk_length,
        walks_per_node=s.walks_per_node,
        shortcut_to_membership=s.edge_count / membership if membership else float("nan"),
    )


def stats_frame(device_ids: list[str], reports: list[StatsReport]) -> pd.DataFrame:
    df = pd.DataFrame([r.to_row() for r in reports])
    df.insert(0, "device_id", device_ids)
    return df


def write_graph_dump(device_ids: list[str], graphs: list[HierGraph], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for device_id, g in zip(device_ids, graphs, strict=True):
            fh.write(json.dumps({"device_id": device_id, **g.to_json()}, separators=(",", ":")))
            fh.write("\n")
    logger.info("Wrote %d graph dumps to %s", len(graphs), path)
    return path
