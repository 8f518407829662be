"""Differentiable ops over `Tensor`. Only the row broadcast used by bias terms and feature gates is supported."""

from __future__ import annotations

import logging
from collections.abc import Callable

import numpy as np

from hgnnmatch.autodiff.tensor import Tensor, constant, record
from hgnnmatch.errors import DegenerateRowError, ShapeError

logger = logging.getLogger(__name__)


def _row_broadcast(op: str, a: Tensor, b: Tensor) -> bool:
    """True when `b` is a length-d vector applied to every row of an [m x d] `a`."""
    if a.shape == b.shape:
        return False
    if a.ndim == 2 and b.ndim == 1 and b.shape[0] == a.shape[1]:
        return True
    raise ShapeError(f"{op}: nonconforming shapes {a.shape} and {b.shape}")


def _reduce(g: np.ndarray, broadcast: bool) -> np.ndarray:
    return g.sum(axis=0) if broadcast else g


# ---------- Linear algebra ----------
def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    av, bv = a.values, b.values
    out = Tensor(av @ bv)
    return record("matmul", out, (a, b), lambda g: (g @ bv.T, av.T @ g))


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError(f"transpose: expected a matrix, got shape {a.shape}")
    out = Tensor(a.values.T)
    return record("transpose", out, (a,), lambda g: (g.T,))


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    src = a.shape
    try:
        out = Tensor(a.values.reshape(shape))
    except ValueError as err:
        raise ShapeError(f"reshape: cannot view {src} as {shape}") from err
    return record("reshape", out, (a,), lambda g: (g.reshape(src),))


def gather_rows(a: Tensor, index) -> Tensor:
    """Rows `a[index]`; repeated indices accumulate gradient."""
    idx = np.asarray(index, dtype=np.int64)
    if a.ndim != 2:
        raise ShapeError(f"gather_rows: expected a matrix, got shape {a.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise ShapeError(f"gather_rows: index out of range for {a.shape[0]} rows")
    out = Tensor(a.values[idx])
    src_shape, dtype = a.shape, a.values.dtype

    def _backward(g: np.ndarray):
        ga = np.zeros(src_shape, dtype=dtype)
        np.add.at(ga, idx, g)
        return (ga,)

    return record("gather_rows", out, (a,), _backward)


# ---------- Elementwise ----------
def add(a: Tensor, b: Tensor) -> Tensor:
    bc = _row_broadcast("add", a, b)
    out = Tensor(a.values + b.values)
    return record("add", out, (a, b), lambda g: (g, _reduce(g, bc)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    bc = _row_broadcast("sub", a, b)
    out = Tensor(a.values - b.values)
    return record("sub", out, (a, b), lambda g: (g, -_reduce(g, bc)))


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    bc = _row_broadcast("hadamard", a, b)
    av, bv = a.values, b.values
    out = Tensor(av * bv)
    return record("hadamard", out, (a, b), lambda g: (g * bv, _reduce(g * av, bc)))


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.values * c)
    return record("scale", out, (a,), lambda g: (g * c,))


def sigmoid(a: Tensor) -> Tensor:
    x = a.values
    e = np.exp(-np.abs(x))
    y = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = Tensor(y, dtype=x.dtype)
    return record("sigmoid", out, (a,), lambda g: (g * y * (1.0 - y),))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.values)
    out = Tensor(y)
    return record("tanh", out, (a,), lambda g: (g * (1.0 - y * y),))


def relu(a: Tensor) -> Tensor:
    on = a.values > 0
    out = Tensor(np.where(on, a.values, 0.0), dtype=a.values.dtype)
    return record("relu", out, (a,), lambda g: (g * on,))


# ---------- Reductions ----------
def sum_all(a: Tensor) -> Tensor:
    out = Tensor(np.asarray([a.values.sum()], dtype=a.values.dtype))
    shape = a.shape
    return record("sum_all", out, (a,), lambda g: (np.full(shape, g[0], dtype=g.dtype),))


def mean_pool_rows(a: Tensor) -> Tensor:
    if a.ndim != 2 or a.shape[0] == 0:
        raise ShapeError(f"mean_pool_rows: expected a non-empty matrix, got shape {a.shape}")
    m = a.shape[0]
    out = Tensor(a.values.mean(axis=0))
    return record("mean_pool_rows", out, (a,), lambda g: (np.broadcast_to(g / m, a.shape).copy(),))


def max_pool_rows(a: Tensor) -> Tensor:
    """Column-wise max over rows; gradient goes to the argmax (lowest row index on ties)."""
    if a.ndim != 2 or a.shape[0] == 0:
        raise ShapeError(f"max_pool_rows: expected a non-empty matrix, got shape {a.shape}")
    arg = np.argmax(a.values, axis=0)
    cols = np.arange(a.shape[1])
    out = Tensor(a.values[arg, cols])
    shape, dtype = a.shape, a.values.dtype

    def _backward(g: np.ndarray):
        ga = np.zeros(shape, dtype=dtype)
        ga[arg, cols] = g
        return (ga,)

    return record("max_pool_rows", out, (a,), _backward)


def concat_rows(*tensors: Tensor) -> Tensor:
    """Concatenate along the first dimension (vectors end to end, matrices stacked)."""
    if not tensors:
        raise ShapeError("concat_rows: nothing to concatenate")
    tail = tensors[0].shape[1:]
    for t in tensors:
        if t.ndim != tensors[0].ndim or t.shape[1:] != tail:
            raise ShapeError(f"concat_rows: nonconforming shapes {[x.shape for x in tensors]}")
    out = Tensor(np.concatenate([t.values for t in tensors], axis=0))
    splits = np.cumsum([t.shape[0] for t in tensors])[:-1]
    return record("concat_rows", out, tensors, lambda g: tuple(np.split(g, splits, axis=0)))


# ---------- Attention / regularisation ----------
def softmax_rows(logits: Tensor, mask=None) -> Tensor:
    """Row softmax with per-row max subtraction; masked entries are exactly zero."""
    x = logits.values
    if x.ndim != 2:
        raise ShapeError(f"softmax_rows: expected a matrix, got shape {logits.shape}")

    if mask is not None:
        keep = np.asarray(mask.values if isinstance(mask, Tensor) else mask).astype(bool)
        if keep.shape != x.shape:
            raise ShapeError(f"softmax_rows: mask shape {keep.shape} does not match logits {x.shape}")
        dead = ~keep.any(axis=1)
        if dead.any():
            raise DegenerateRowError(int(np.argmax(dead)))
        z = np.where(keep, x, -np.inf)
    else:
        if x.shape[1] == 0:
            raise DegenerateRowError(0, "softmax_rows: rows are empty")
        z = x

    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)
    out = Tensor(s, dtype=x.dtype)
    return record("softmax_rows", out, (logits,), lambda g: (s * (g - (g * s).sum(axis=1, keepdims=True)),))


def dropout(a: Tensor, rate: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """Inverted dropout; identity outside training or at rate 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    if rng is None:
        raise ValueError("dropout in training mode needs a random generator")
    keep = (rng.random(a.shape) >= rate).astype(a.values.dtype) / (1.0 - rate)
    return hadamard(a, constant(keep, like=a))


_ELEMENTWISE: dict[str, Callable[..., Tensor]] = {
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "hadamard": hadamard,
    "add": add,
    "sub": sub,
    "scale": scale,
    "mean_pool_rows": mean_pool_rows,
    "max_pool_rows": max_pool_rows,
    "concat_rows": concat_rows,
}


def elementwise(op_kind: str, *operands) -> Tensor:
    try:
        fn = _ELEMENTWISE[op_kind]
    except KeyError as err:
        raise ValueError(f"Unsupported op_kind: {op_kind!r}. Supported: {list(_ELEMENTWISE)}") from err
    return fn(*operands)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Row-major dense layer `x @ W (+ b)`."""
    y = matmul(x, weight)
    return add(y, bias) if bias is not None else y
