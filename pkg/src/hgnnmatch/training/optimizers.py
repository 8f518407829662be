import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.config import config

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    name: str = "adam"
    lr: float = config.DEFAULT_LR
    batch_size: int = config.DEFAULT_BATCH
    epochs: int = config.DEFAULT_EPOCHS
    beta1: float = config.ADAM_BETAS[0]
    beta2: float = config.ADAM_BETAS[1]
    eps: float = config.ADAM_EPS

    def __post_init__(self):
        if self.name not in _OPTIMIZERS:
            raise ValueError(f"Unsupported optimizer: {self.name!r}. Supported: {list(_OPTIMIZERS)}")
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError(f"batch_size and epochs must be >= 1, got {self.batch_size} and {self.epochs}")


class Optimizer(ABC):
    def __init__(self, cfg: OptimizerConfig):
        self.cfg = cfg

    @abstractmethod
    def step(self, store: ParamStore) -> None:
        """Apply one update from the gradients currently held by `store`."""


class SGD(Optimizer):
    def step(self, store: ParamStore) -> None:
        if self.cfg.lr == 0.0:
            return
        for name, g in store.grads().items():
            store[name].values -= self.cfg.lr * g


class Adam(Optimizer):
    def __init__(self, cfg: OptimizerConfig):
        super().__init__(cfg)
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, store: ParamStore) -> None:
        self.t += 1
        b1, b2 = self.cfg.beta1, self.cfg.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t

        for name, g in store.grads().items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] *= b1
            self.m[name] += (1.0 - b1) * g
            self.v[name] *= b2
            self.v[name] += (1.0 - b2) * (g * g)
            if self.cfg.lr == 0.0:
                continue
            denom = np.sqrt(self.v[name] / bc2) + self.cfg.eps
            store[name].values -= (self.cfg.lr / bc1) * self.m[name] / denom


_OPTIMIZERS: dict[str, type[Optimizer]] = {"adam": Adam, "sgd": SGD}


def get_optimizer(cfg: OptimizerConfig) -> Optimizer:
    return _OPTIMIZERS[cfg.name](cfg)
