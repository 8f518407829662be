"""URL-set Jaccard similarity: the trivial oracle that checks a corpus is learnable but not degenerate."""

from collections.abc import Mapping, Sequence

import numpy as np

from hgnnmatch.data.pairs import PairExample
from hgnnmatch.graph.logs import DeviceLog, UrlKey


def jaccard(a: set[UrlKey], b: set[UrlKey]) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def jaccard_scores(logs: Mapping[str, DeviceLog], pairs: Sequence[PairExample]) -> np.ndarray:
    url_sets = {device_id: set(log.url_keys()) for device_id, log in logs.items()}
    return np.asarray([jaccard(url_sets[p.device_a], url_sets[p.device_b]) for p in pairs], dtype=np.float64)
