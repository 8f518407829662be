import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from hgnnmatch.config import config
from hgnnmatch.errors import DataError, UsageError

logger = logging.getLogger(__name__)

SEED_STREAMS = ("data", "init", "shuffle", "dropout", "walks", "split")

_DEFAULT_SETTINGS: dict[str, Any] = {
    "seed": config.DEFAULT_SEED,
    "K": config.DEFAULT_K,
    "dim": config.DEFAULT_DIM,
    "fine_rounds": config.DEFAULT_FINE_ROUNDS,
    "hetero_rounds": config.DEFAULT_HETERO_ROUNDS,
    "pool_dim": config.DEFAULT_POOL_DIM,
    "head": config.DEFAULT_HEAD,
    "cross_score": config.DEFAULT_CROSS_SCORE,
    "lr": config.DEFAULT_LR,
    "optimizer": "adam",
    "batch": config.DEFAULT_BATCH,
    "epochs": config.DEFAULT_EPOCHS,
    "dropout": config.DEFAULT_DROPOUT,
    "walk_len": config.DEFAULT_WALK_LENGTH,
    "walks_per_node": config.DEFAULT_WALKS_PER_NODE,
    "threads": 1,
    "users": config.DEFAULT_USERS,
    "devices_per_user": config.DEFAULT_DEVICES_PER_USER,
    "mean_log_len": config.DEFAULT_MEAN_LOG_LEN,
    "vocab": config.DEFAULT_VOCAB,
    "profile_dim": config.DEFAULT_PROFILE_DIM,
    "noise": config.DEFAULT_NOISE,
    "neg_ratio": 1.0,
    "test_fraction": config.TEST_USER_FRACTION,
    "symmetric": False,
    "logs": None,
    "pairs": None,
    "checkpoint": None,
}


def default_settings() -> dict[str, Any]:
    return dict(_DEFAULT_SETTINGS)


def rng_stream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """
    Named sub-stream of the root seed; each component can be reproduced in isolation.
    Extra integer `keys` derive independent child streams (e.g. one per synthetic user).
    """
    if name not in SEED_STREAMS:
        raise ValueError(f"Unknown seed stream: {name!r}. Supported: {list(SEED_STREAMS)}")
    entropy = [int(seed) & 0xFFFF_FFFF_FFFF_FFFF, zlib.crc32(name.encode("utf-8")), *(int(k) for k in keys)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class RunConfig:
    command: str
    out_dir: Path
    settings: dict[str, Any] = field(default_factory=default_settings)

    @property
    def seed(self) -> int:
        return int(self.settings["seed"])

    def __getitem__(self, key: str) -> Any:
        return self.settings[key]

    def to_dict(self) -> dict[str, Any]:
        return {"command": self.command, "out_dir": str(self.out_dir), "settings": self.settings}

    def write(self) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / "run_config.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        return path


def load_config_file(path: Path) -> dict[str, Any]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as err:
        raise DataError(f"Config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise DataError(f"Config file {path} is not valid JSON: {err.msg}", line=err.lineno) from err

    # A run_config.json snapshot nests its values under "settings"
    if isinstance(raw, dict) and isinstance(raw.get("settings"), dict):
        raw = raw["settings"]
    if not isinstance(raw, dict):
        raise DataError(f"Config file {path} must hold a JSON object, got {type(raw).__name__}")

    unknown = set(raw) - set(_DEFAULT_SETTINGS)
    if unknown:
        raise UsageError(f"Unknown config keys in {path}: {sorted(unknown)}")
    return raw


def resolve_run_config(
    command: str, flags: dict[str, Any], out_dir: Path | None = None, config_path: Path | None = None
) -> RunConfig:
    """Merge defaults < config file < flags. `flags` holds only explicitly passed values."""
    settings = default_settings()

    file_settings = load_config_file(config_path) if config_path else {}
    settings.update(file_settings)

    for key, value in flags.items():
        if key not in settings:
            raise UsageError(f"Unknown setting: {key!r}")
        if key in file_settings and file_settings[key] != value:
            logger.warning(
                "Config conflict for %r: config file has %r, flag has %r; using the flag value.",
                key,
                file_settings[key],
                value,
            )
        settings[key] = value

    resolved_out = Path(out_dir) if out_dir else config.RUNS_DIR / command
    return RunConfig(command=command, out_dir=resolved_out, settings=settings)
