"""
Synthetic multi-device browsing corpus.

Every user owns a profile of `profile_dim` URLs drawn from a Zipf-weighted vocabulary and a
first-order Markov chain over that profile. Each device walks the user's chain; with
probability `noise` a step is replaced by a uniformly random URL from the whole vocabulary, after
which the walk restarts from a uniform profile state. Log lengths are geometric with mean
`mean_log_len`, truncated to [10, 5 * mean_log_len].
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from hgnnmatch.config import config
from hgnnmatch.config.utils import rng_stream
from hgnnmatch.data.pairs import PairExample, sample_pairs
from hgnnmatch.graph.logs import DeviceLog, Event

logger = logging.getLogger(__name__)

MIN_LOG_LEN = 10
DIRICHLET_ALPHA = 0.5
MAX_GAP_S = 600


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = config.DEFAULT_USERS
    devices_per_user: int = config.DEFAULT_DEVICES_PER_USER
    mean_log_len: int = config.DEFAULT_MEAN_LOG_LEN
    vocab_size: int = config.DEFAULT_VOCAB
    profile_dim: int = config.DEFAULT_PROFILE_DIM
    noise: float = config.DEFAULT_NOISE
    seed: int = config.DEFAULT_SEED

    def __post_init__(self):
        for name in ("n_users", "devices_per_user", "mean_log_len", "vocab_size", "profile_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise must be in [0, 1], got {self.noise}")
        if self.vocab_size < self.profile_dim:
            raise ValueError(f"vocab_size ({self.vocab_size}) must be >= profile_dim ({self.profile_dim})")

    def to_dict(self) -> dict:
        return asdict(self)


def zipf_weights(vocab_size: int) -> np.ndarray:
    w = 1.0 / np.arange(1, vocab_size + 1)
    return w / w.sum()


def sample_device_urls(
    profile: np.ndarray,
    cum_transitions: np.ndarray,
    length: int,
    noise: float,
    vocab_size: int,
    rng: np.random.Generator,
) -> list[int]:
    """One device's URL ids; `cum_transitions` holds row-wise cumulative transition probabilities."""
    n_states = len(profile)
    urls: list[int] = []
    state: int | None = None
    for _ in range(length):
        if rng.random() < noise:
            urls.append(int(rng.integers(vocab_size)))
            state = None
            continue
        if state is None:
            state = int(rng.integers(n_states))
        else:
            state = min(int(np.searchsorted(cum_transitions[state], rng.random(), side="right")), n_states - 1)
        urls.append(int(profile[state]))
    return urls


def _log_length(mean: int, rng: np.random.Generator) -> int:
    return int(np.clip(rng.geometric(1.0 / mean), MIN_LOG_LEN, 5 * mean))


def _user_devices(cfg: SynthConfig, user: int, weights: np.ndarray) -> list[DeviceLog]:
    rng = rng_stream(cfg.seed, "data", user)
    profile = rng.choice(cfg.vocab_size, size=cfg.profile_dim, replace=False, p=weights)
    cum = np.cumsum(rng.dirichlet(np.full(cfg.profile_dim, DIRICHLET_ALPHA), size=cfg.profile_dim), axis=1)

    devices = []
    for k in range(cfg.devices_per_user):
        urls = sample_device_urls(profile, cum, _log_length(cfg.mean_log_len, rng), cfg.noise, cfg.vocab_size, rng)
        ts = int(rng.integers(1_600_000_000, 1_700_000_000))
        events = []
        for url in urls:
            events.append(Event(ts, (url,)))
            ts += int(rng.integers(1, MAX_GAP_S))
        devices.append(DeviceLog(f"u{user:05d}_d{k}", tuple(events)))
    return devices


def generate_corpus(cfg: SynthConfig) -> tuple[list[DeviceLog], dict[str, str]]:
    """Device logs plus the ground-truth device -> user map; users draw from independent child streams."""
    weights = zipf_weights(cfg.vocab_size)
    logs: list[DeviceLog] = []
    users: dict[str, str] = {}
    for user in range(cfg.n_users):
        for log in _user_devices(cfg, user, weights):
            logs.append(log)
            users[log.device_id] = f"u{user:05d}"

    mean_len = sum(log.n for log in logs) / len(logs)
    logger.info("Generated %d devices for %d users (mean log length %.1f)", len(logs), cfg.n_users, mean_len)
    return logs, users


def generate_dataset(cfg: SynthConfig, neg_ratio: float = 1.0) -> tuple[list[DeviceLog], list[PairExample]]:
    logs, users = generate_corpus(cfg)
    if len(logs) < 2:
        return logs, []
    try:
        pairs = sample_pairs(logs, users, neg_ratio, cfg.seed)
    except ValueError:
        logger.warning("No user owns two devices; the dataset has no pairs")
        return logs, []
    return logs, pairs
