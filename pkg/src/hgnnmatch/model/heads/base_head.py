from abc import ABC, abstractmethod

import numpy as np

from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.autodiff.tensor import Tensor
from hgnnmatch.model.config import ModelConfig


class AbstractMatchHead(ABC):
    """Turns two encoded devices into a match probability ŷ (shape [1])."""

    name: str

    @abstractmethod
    def init_params(self, store: ParamStore, cfg: ModelConfig) -> None:
        pass

    @abstractmethod
    def forward(
        self,
        X_v: Tensor,
        X_w: Tensor,
        params: ParamStore,
        cfg: ModelConfig,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        pass
