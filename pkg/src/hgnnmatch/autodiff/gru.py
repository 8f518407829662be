"""
GRU cell on the tape.

Convention (fixed here, the rest of the package relies on it), with row vectors and `x @ W`:

    z  = sigmoid(x W_z + h U_z + b_z)
    r  = sigmoid(x W_r + h U_r + b_r)
    h~ = tanh(x W_h + (r * h) U_h + b_h)
    h' = (1 - z) * h + z * h~

`h` and `x` may be single vectors [d] or row batches [m x d]; batched rows never interact.
"""

from collections.abc import Mapping

import numpy as np

from hgnnmatch.autodiff import ops
from hgnnmatch.autodiff.tensor import Tensor, constant
from hgnnmatch.errors import ShapeError

GRU_WEIGHTS = ("W_z", "U_z", "W_r", "U_r", "W_h", "U_h")
GRU_BIASES = ("b_z", "b_r", "b_h")


def _gate(x: Tensor, h: Tensor, params: Mapping[str, Tensor], suffix: str) -> Tensor:
    pre = ops.add(ops.matmul(x, params[f"W_{suffix}"]), ops.matmul(h, params[f"U_{suffix}"]))
    return ops.sigmoid(ops.add(pre, params[f"b_{suffix}"]))


def gru_step(h: Tensor, x: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    missing = [k for k in (*GRU_WEIGHTS, *GRU_BIASES) if k not in params]
    if missing:
        raise KeyError(f"GRU parameters missing: {missing}")

    d = params["U_z"].shape[0]
    d_in = params["W_z"].shape[0]
    if h.shape[-1] != d or x.shape[-1] != d_in or h.ndim != x.ndim:
        raise ShapeError(f"gru_step: hidden {h.shape} / input {x.shape} do not match hidden size {d}, input {d_in}")

    single = h.ndim == 1
    if single:
        h = ops.reshape(h, (1, d))
        x = ops.reshape(x, (1, d_in))
    elif h.shape[0] != x.shape[0]:
        raise ShapeError(f"gru_step: batch mismatch between hidden {h.shape} and input {x.shape}")

    z = _gate(x, h, params, "z")
    r = _gate(x, h, params, "r")
    cand_pre = ops.add(ops.matmul(x, params["W_h"]), ops.matmul(ops.hadamard(r, h), params["U_h"]))
    cand = ops.tanh(ops.add(cand_pre, params["b_h"]))

    keep = ops.sub(constant(np.ones(z.shape), like=z), z)
    out = ops.add(ops.hadamard(keep, h), ops.hadamard(z, cand))
    return ops.reshape(out, (d,)) if single else out
