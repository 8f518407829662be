from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from hgnnmatch.autodiff.gradcheck import finite_diff_grad, max_relative_error
from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.autodiff.tensor import Tape, Tensor, backward
from hgnnmatch.graph.logs import DeviceLog

LossFn = Callable[[ParamStore], Tensor]


@pytest.fixture(scope="session")
def project_root() -> Path:
    return Path(__file__).resolve().parents[1]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def analytic_grad(fn: LossFn, store: ParamStore) -> dict[str, np.ndarray]:
    store.zero_grad()
    with Tape() as tape:
        loss = fn(store)
    backward(loss, tape, params=store.tensors())
    return {name: g.copy() for name, g in store.grads().items()}


def gradcheck(fn: LossFn, store: ParamStore, floor: float = 1e-8, names=None) -> float:
    """Worst relative error between tape gradients and central differences."""
    analytic = analytic_grad(fn, store)
    numeric = finite_diff_grad(lambda s: fn(s).item(), store, names=names)
    return max_relative_error(analytic, numeric, floor=floor)


def random_store(rng: np.random.Generator, shapes: dict[str, tuple[int, ...]], seed: int = 0) -> ParamStore:
    store = ParamStore(seed=seed)
    for name, shape in shapes.items():
        store.add(name, rng.standard_normal(shape))
    return store


def log_of(urls, device_id: str = "dev") -> DeviceLog:
    return DeviceLog.from_urls(device_id, list(urls))
