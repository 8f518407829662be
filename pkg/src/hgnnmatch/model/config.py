import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from hgnnmatch.config import config

HEADS = ("cross_attention", "elementwise")
CROSS_SCORES = ("mean", "dot")
PRECISIONS = {"float64": np.float64, "float32": np.float32}


@dataclass(frozen=True)
class ModelConfig:
    """
    The GRU hidden size is `d` by construction, since Ψ (mean of x_i and M_i) needs both in the same space.
    `precision="float32"` trades exactness for speed and is not used for gradient checks.
    """

    vocab_size: int
    K: int = config.DEFAULT_K
    d: int = config.DEFAULT_DIM
    fine_rounds: int = config.DEFAULT_FINE_ROUNDS
    hetero_rounds: int = config.DEFAULT_HETERO_ROUNDS
    dropout: float = config.DEFAULT_DROPOUT
    pool_dim: int = config.DEFAULT_POOL_DIM
    head: str = config.DEFAULT_HEAD
    cross_score: str = config.DEFAULT_CROSS_SCORE
    precision: str = "float64"
    seed: int = config.DEFAULT_SEED

    def __post_init__(self):
        if self.vocab_size < 1:
            raise ValueError(f"vocab_size must be >= 1, got {self.vocab_size}")
        for name in ("K", "d", "fine_rounds", "hetero_rounds", "pool_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.head not in HEADS:
            raise ValueError(f"Unsupported head: {self.head!r}. Supported: {list(HEADS)}")
        if self.cross_score not in CROSS_SCORES:
            raise ValueError(f"Unsupported cross_score: {self.cross_score!r}. Supported: {list(CROSS_SCORES)}")
        if self.precision not in PRECISIONS:
            raise ValueError(f"Unsupported precision: {self.precision!r}. Supported: {list(PRECISIONS)}")

    @property
    def dtype(self):
        return PRECISIONS[self.precision]

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Path) -> "ModelConfig":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))
