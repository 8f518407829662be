import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
import pandas as pd

from hgnnmatch.config.utils import rng_stream
from hgnnmatch.errors import DataError
from hgnnmatch.graph.logs import DeviceLog

logger = logging.getLogger(__name__)

PAIR_COLUMNS = ["device_a", "device_b", "label"]
USER_COLUMNS = ["device_id", "user_id"]

# above this many candidate negatives, sample by rejection instead of enumerating
_ENUMERATE_LIMIT = 200_000


@dataclass(frozen=True)
class PairExample:
    device_a: str
    device_b: str
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"Pair label must be 0 or 1, got {self.label!r}")
        if self.device_a == self.device_b:
            raise ValueError(f"A pair needs two distinct devices, got {self.device_a!r} twice")


def _device_order(logs: Sequence[DeviceLog] | Sequence[str]) -> list[str]:
    return [log.device_id if isinstance(log, DeviceLog) else str(log) for log in logs]


def sample_pairs(
    logs: Sequence[DeviceLog] | Sequence[str], users: Mapping[str, str], neg_ratio: float = 1.0, seed: int = 0
) -> list[PairExample]:
    """
    Every same-user device pair as a positive, then ceil(neg_ratio * positives) distinct cross-user
    negatives drawn uniformly. Pairs are oriented by position in `logs`.
    """
    devices = _device_order(logs)
    if len(devices) < 2:
        raise ValueError(f"Need at least two devices to form pairs, got {len(devices)}")
    if neg_ratio < 0:
        raise ValueError(f"neg_ratio must be >= 0, got {neg_ratio}")
    missing = [d for d in devices if d not in users]
    if missing:
        raise DataError(f"No user id for devices {missing[:5]}")

    by_user: dict[str, list[int]] = {}
    for i, device in enumerate(devices):
        by_user.setdefault(users[device], []).append(i)

    positives = [
        PairExample(devices[i], devices[j], 1) for group in by_user.values() for i, j in combinations(group, 2)
    ]
    if not positives:
        raise ValueError("No positive pairs available: every user has a single device")

    n = len(devices)
    available = n * (n - 1) // 2 - len(positives)
    wanted = math.ceil(neg_ratio * len(positives))
    if wanted > available:
        logger.warning(
            "Requested %d negatives but only %d cross-user pairs exist; using all of them", wanted, available
        )
        wanted = available

    rng = rng_stream(seed, "data")
    user_of = [users[d] for d in devices]
    picked: list[tuple[int, int]]
    if available <= _ENUMERATE_LIMIT:
        candidates = [(i, j) for i, j in combinations(range(n), 2) if user_of[i] != user_of[j]]
        order = rng.permutation(len(candidates))[:wanted]
        picked = [candidates[k] for k in order]
    else:
        seen: set[tuple[int, int]] = set()
        picked = []
        while len(picked) < wanted:
            i, j = (int(x) for x in rng.integers(n, size=2))
            if i == j or user_of[i] == user_of[j]:
                continue
            pair = (min(i, j), max(i, j))
            if pair not in seen:
                seen.add(pair)
                picked.append(pair)

    negatives = [PairExample(devices[i], devices[j], 0) for i, j in picked]
    logger.info("Sampled %d positive and %d negative pairs over %d devices", len(positives), len(negatives), n)
    return positives + negatives


def split_users(users: Mapping[str, str], fraction: float, seed: int) -> tuple[set[str], set[str]]:
    """(kept, held_out) user ids; holds out round(fraction * users), at least one when there are two or more users."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    user_ids = sorted(set(users.values()))
    n_out = round(fraction * len(user_ids))
    if fraction > 0 and len(user_ids) >= 2:
        n_out = min(max(n_out, 1), len(user_ids) - 1)
    order = rng_stream(seed, "split").permutation(len(user_ids))
    held_out = {user_ids[k] for k in order[:n_out]}
    return set(user_ids) - held_out, held_out


def user_components(pairs: Iterable[PairExample]) -> dict[str, int]:
    """Recover users as connected components of the positive pairs; unmatched devices are singletons."""
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in pairs:
        ra, rb = find(p.device_a), find(p.device_b)
        if p.label == 1 and ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    roots = sorted({find(x) for x in parent})
    component = {root: k for k, root in enumerate(roots)}
    return {device: component[find(device)] for device in parent}


# ---------- CSV io ----------
def write_pairs(pairs: Sequence[PairExample], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame([(p.device_a, p.device_b, p.label) for p in pairs], columns=PAIR_COLUMNS)
    df.to_csv(path, index=False)
    return path


def _read_csv(path: Path, columns: list[str]) -> pd.DataFrame:
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as err:
        raise DataError(f"File not found: {path}") from err
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=columns)
    except pd.errors.ParserError as err:
        raise DataError(f"{path} is not valid CSV: {err}") from err
    except UnicodeDecodeError as err:
        raise DataError(f"{path} is not valid UTF-8 (byte {err.start})") from err

    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise DataError(f"{path} lacks columns {missing}", line=1)
    return df


def read_pairs(path: Path) -> list[PairExample]:
    df = _read_csv(path, PAIR_COLUMNS)
    pairs = []
    for row_no, row in enumerate(df.itertuples(index=False), start=2):
        if row.label not in ("0", "1"):
            raise DataError(f"label must be 0 or 1, got {row.label!r}", line=row_no)
        try:
            pairs.append(PairExample(row.device_a, row.device_b, int(row.label)))
        except ValueError as err:
            raise DataError(str(err), line=row_no) from err
    logger.info("Read %d pairs from %s", len(pairs), path)
    return pairs


def write_users(users: Mapping[str, str], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(users.items()), columns=USER_COLUMNS).to_csv(path, index=False)
    return path


def read_users(path: Path) -> dict[str, str]:
    df = _read_csv(path, USER_COLUMNS)
    return dict(zip(df["device_id"], df["user_id"], strict=True))


def check_pairs_resolve(pairs: Iterable[PairExample], device_ids: Iterable[str]) -> None:
    known = set(device_ids)
    for k, p in enumerate(pairs):
        for device in (p.device_a, p.device_b):
            if device not in known:
                raise DataError(f"pair {k} references unknown device {device!r}", line=k + 2)


def labels_of(pairs: Sequence[PairExample]) -> np.ndarray:
    return np.asarray([p.label for p in pairs], dtype=np.int64)
