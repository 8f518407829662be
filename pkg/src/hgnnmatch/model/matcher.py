import logging
from pathlib import Path

import numpy as np

from hgnnmatch.autodiff.checkpoint import load_checkpoint, save_checkpoint
from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.autodiff.tensor import Tensor
from hgnnmatch.errors import DataError
from hgnnmatch.graph.builder import HierGraph
from hgnnmatch.model.config import ModelConfig
from hgnnmatch.model.heads.cross_attention import symmetric_score
from hgnnmatch.model.heads.providers import get_match_head
from hgnnmatch.model.hgnn import EncodedDevice, encode_device
from hgnnmatch.model.params import init_params

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "model.ckpt"
MODEL_CONFIG_NAME = "model_config.json"


class Matcher:
    """Encoder plus match head over one ParamStore."""

    def __init__(self, cfg: ModelConfig, params: ParamStore | None = None):
        self.cfg = cfg
        self.params = params if params is not None else init_params(cfg)
        self.head = get_match_head(cfg.head)

    def encode(self, g: HierGraph) -> EncodedDevice:
        return encode_device(g, self.params, self.cfg)

    def forward(
        self, X_v: Tensor, X_w: Tensor, training: bool = False, rng: np.random.Generator | None = None
    ) -> Tensor:
        return self.head.forward(X_v, X_w, self.params, self.cfg, training, rng)

    def score(self, g_v: HierGraph, g_w: HierGraph, symmetric: bool = False) -> float:
        return self.score_encoded(self.encode(g_v).X, self.encode(g_w).X, symmetric)

    def score_encoded(self, X_v: Tensor, X_w: Tensor, symmetric: bool = False) -> float:
        if symmetric:
            if self.cfg.head != "cross_attention":
                raise ValueError("Symmetric scoring is only defined for the cross_attention head")
            return symmetric_score(X_v, X_w, self.params, self.cfg)
        return self.forward(X_v, X_w).item()

    def save(self, out_dir: Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.cfg.save(out_dir / MODEL_CONFIG_NAME)
        return save_checkpoint(self.params, out_dir / CHECKPOINT_NAME)

    @classmethod
    def load(cls, checkpoint: Path) -> "Matcher":
        """`checkpoint` is the .ckpt file or its directory; model_config.json must sit beside it."""
        checkpoint = Path(checkpoint)
        if checkpoint.is_dir():
            checkpoint = checkpoint / CHECKPOINT_NAME
        cfg = ModelConfig.load(checkpoint.parent / MODEL_CONFIG_NAME)
        params = init_params(cfg)
        loaded = load_checkpoint(checkpoint, expected=params, dtype=cfg.dtype)
        try:
            params.load_state({name: loaded[name].values for name in params})
        except ValueError as err:
            raise DataError(f"{checkpoint} does not fit the architecture in {MODEL_CONFIG_NAME}: {err}") from err
        logger.info("Loaded %s (%d parameters, head=%s)", checkpoint, params.num_parameters(), cfg.head)
        return cls(cfg, params)
