from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator

import numpy as np

from hgnnmatch.autodiff.tensor import Tensor
from hgnnmatch.config.utils import rng_stream

logger = logging.getLogger(__name__)


class ParamStore:
    """
    Named learnable tensors. Initialization draws from the `init` sub-stream of `seed` in
    insertion order, so the same seed and the same sequence of `add_*` calls give bit-identical values.
    """

    def __init__(self, seed: int = 0, dtype=np.float64):
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.entries: dict[str, Tensor] = {}
        self._rng = rng_stream(seed, "init")

    # ---------- Construction ----------
    def add(self, name: str, values) -> Tensor:
        if name in self.entries:
            raise ValueError(f"Duplicate parameter name: {name!r}")
        t = Tensor(np.array(values, dtype=self.dtype), requires_grad=True, name=name)
        self.entries[name] = t
        return t

    def add_weight(self, name: str, shape: tuple[int, int], fan_in: int | None = None) -> Tensor:
        """uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); fan_in defaults to the input (first) dimension."""
        bound = 1.0 / np.sqrt(fan_in if fan_in is not None else shape[0])
        return self.add(name, self._rng.uniform(-bound, bound, size=shape))

    def add_embedding(self, name: str, shape: tuple[int, int]) -> Tensor:
        """N(0, 1) lookup table; rows are selected, not mixed, so there is no fan-in to scale by."""
        return self.add(name, self._rng.standard_normal(size=shape))

    def add_bias(self, name: str, size: int) -> Tensor:
        return self.add(name, np.zeros(size))

    # ---------- Access ----------
    def __getitem__(self, name: str) -> Tensor:
        return self.entries[name]

    def __contains__(self, name: object) -> bool:
        return name in self.entries

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def tensors(self) -> list[Tensor]:
        return list(self.entries.values())

    def slice(self, prefix: str) -> dict[str, Tensor]:
        """Entries under `prefix.` with the prefix stripped, e.g. slice('gru.0')['W_z']."""
        head = prefix.rstrip(".") + "."
        return {name[len(head) :]: t for name, t in self.entries.items() if name.startswith(head)}

    def num_parameters(self) -> int:
        return sum(t.size for t in self.entries.values())

    # ---------- Gradients / state ----------
    def zero_grad(self) -> None:
        for t in self.entries.values():
            t.zero_grad()

    def grads(self) -> dict[str, np.ndarray]:
        return {name: (t.grad if t.grad is not None else np.zeros_like(t.values)) for name, t in self.entries.items()}

    def state(self) -> dict[str, np.ndarray]:
        return {name: t.values.copy() for name, t in self.entries.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, values in state.items():
            if name not in self.entries:
                raise KeyError(f"Unknown parameter in state: {name!r}")
            if values.shape != self.entries[name].shape:
                raise ValueError(f"Shape mismatch for {name!r}: {values.shape} vs {self.entries[name].shape}")
            self.entries[name].values[...] = values

    def flag_unused(self, used: Iterable[str]) -> list[str]:
        unused = sorted(set(self.entries) - set(used))
        for name in unused:
            logger.warning("Parameter %r is never used by the model", name)
        return unused
