from .builder import FineGraph, HierGraph, build_coarse_level, build_fine_graph, build_hier_graph, build_hier_graphs
from .logs import DeviceLog, Event, load_logs, write_logs
from .shortcut import ShortcutGraph, build_shortcut_graph
from .stats import StatsReport, graph_stats, stats_frame, write_graph_dump

__all__ = [
    "DeviceLog",
    "Event",
    "FineGraph",
    "HierGraph",
    "ShortcutGraph",
    "StatsReport",
    "build_coarse_level",
    "build_fine_graph",
    "build_hier_graph",
    "build_hier_graphs",
    "build_shortcut_graph",
    "graph_stats",
    "load_logs",
    "stats_frame",
    "write_graph_dump",
    "write_logs",
]
