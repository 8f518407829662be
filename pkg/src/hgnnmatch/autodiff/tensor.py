"""
Dense tensors and the recorded computation tape used for reverse-mode gradients.

A `Tape` is a Wengert list: every differentiable op appends one entry holding its output, its
inputs and a closure mapping the output gradient to input gradients. `backward` walks the list in
reverse, which is a valid topological order because an entry can only consume tensors created
before it.

Tapes are confined to the thread that opened them (`with Tape() as tape:`); ops executed with no
active tape are not recorded.
"""

from __future__ import annotations

import itertools
import logging
import threading
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from hgnnmatch.errors import TapeError

logger = logging.getLogger(__name__)

_node_ids = itertools.count()
_local = threading.local()

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "node_id", "name")

    def __init__(self, values, requires_grad: bool = False, name: str | None = None, dtype=None):
        arr = np.asarray(values)
        if dtype is None:
            dtype = arr.dtype if np.issubdtype(arr.dtype, np.floating) else np.float64
        self.values: np.ndarray = np.ascontiguousarray(arr, dtype=dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.node_id = next(_node_ids)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def item(self) -> float:
        if self.values.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.values

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.values)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


def constant(values, like: Tensor | None = None) -> Tensor:
    """Non-differentiable tensor, matching the dtype of `like` when given."""
    dtype = like.values.dtype if like is not None else None
    return Tensor(values, requires_grad=False, dtype=dtype)


@dataclass(frozen=True)
class TapeEntry:
    op: str
    out: Tensor
    inputs: tuple[Tensor, ...]
    backward_fn: BackwardFn


class Tape:
    def __init__(self):
        self.entries: list[TapeEntry] = []

    def __enter__(self) -> Tape:
        stack = getattr(_local, "stack", None)
        if stack is None:
            stack = _local.stack = []
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _local.stack
        if not stack or stack[-1] is not self:
            raise TapeError("Tape exited out of order")
        stack.pop()

    def __len__(self) -> int:
        return len(self.entries)


def active_tape() -> Tape | None:
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


def record(op: str, out: Tensor, inputs: Iterable[Tensor], backward_fn: BackwardFn) -> Tensor:
    """Append `out = op(inputs)` to the active tape when any input needs a gradient."""
    tape = active_tape()
    inputs = tuple(inputs)
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.entries.append(TapeEntry(op, out, inputs, backward_fn))
    return out


def backward(loss: Tensor, tape: Tape, params: Iterable[Tensor] | None = None) -> None:
    """
    Accumulate d(loss)/d(leaf) into `.grad` of every leaf reachable through `tape`.
    Leaves passed in `params` that the loss does not reach receive a zero gradient.
    Repeated calls without resetting grads accumulate.
    """
    if loss.size != 1:
        raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")

    produced = {entry.out.node_id for entry in tape.entries}
    grads: dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.values)}
    leaves: dict[int, Tensor] = {}
    if loss.node_id not in produced and loss.requires_grad:
        leaves[loss.node_id] = loss

    for entry in reversed(tape.entries):
        out_id = entry.out.node_id
        for inp in entry.inputs:
            if inp.node_id >= out_id:
                raise TapeError(f"Cyclic tape: op {entry.op!r} consumes node {inp.node_id} >= its output {out_id}")

        g = grads.pop(out_id, None)
        if g is None:
            continue

        for inp, g_in in zip(entry.inputs, entry.backward_fn(g), strict=True):
            if g_in is None or not inp.requires_grad:
                continue
            prev = grads.get(inp.node_id)
            grads[inp.node_id] = g_in if prev is None else prev + g_in
            if inp.node_id not in produced:
                leaves[inp.node_id] = inp

    for node_id, leaf in leaves.items():
        g = grads.get(node_id)
        if g is None:
            continue
        leaf.grad = g.astype(leaf.values.dtype, copy=True) if leaf.grad is None else leaf.grad + g

    for p in params or ():
        if p.grad is None:
            p.zero_grad()
