"""
Hierarchical encoder.

Per device: X0 = URL embeddings (mean of token embeddings); `fine_rounds` rounds of GRU message
passing over ordered in-neighbors; then `hetero_rounds` rounds of (coarse mean update, attention
update of fine nodes from their coarse nodes). Matrices act on row vectors (`x @ W`).
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from hgnnmatch.autodiff import ops
from hgnnmatch.autodiff.gru import gru_step
from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.autodiff.tensor import Tensor, constant
from hgnnmatch.errors import ShapeError
from hgnnmatch.graph.builder import HierGraph
from hgnnmatch.graph.logs import UrlKey
from hgnnmatch.model.config import ModelConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EncodedDevice:
    X: Tensor  # [m x d]
    node_keys: tuple[UrlKey, ...]

    @property
    def m(self) -> int:
        return self.X.shape[0]


def _check_rows(op: str, g: HierGraph, X: Tensor) -> None:
    if X.ndim != 2 or X.shape[0] != g.m:
        raise ShapeError(f"{op}: features {X.shape} do not align with {g.m} fine nodes")


def embed_nodes(g: HierGraph, params: ParamStore | Mapping[str, Tensor]) -> Tensor:
    E = params["embedding"]
    vocab = E.shape[0]
    tokens = [t for key in g.fine_nodes for t in key]
    if any(t < 0 or t >= vocab for t in tokens):
        bad = next(t for t in tokens if t < 0 or t >= vocab)
        raise ValueError(f"Token id {bad} outside the embedding vocabulary of size {vocab}")

    # averaging matrix: row i spreads 1/len(key) over the key's token rows
    avg = np.zeros((g.m, len(tokens)))
    col = 0
    for i, key in enumerate(g.fine_nodes):
        avg[i, col : col + len(key)] = 1.0 / len(key)
        col += len(key)
    return ops.matmul(constant(avg, like=E), ops.gather_rows(E, tokens))


def fine_message_round(g: HierGraph, X: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """
    M_i = GRU([x_j1, ..., x_jκ, x_i]) from a zero state, then x_i <- mean(x_i, M_i).
    All nodes run in one batch: sequences are right-aligned and rows whose sequence has not
    started yet keep their (zero) state.
    """
    _check_rows("fine_message_round", g, X)
    m, d = X.shape
    seqs = [(*g.in_neighbors[i], i) for i in range(m)]
    steps = max(len(s) for s in seqs)

    idx = np.zeros((steps, m), dtype=np.int64)
    active = np.zeros((steps, m), dtype=bool)
    for i, seq in enumerate(seqs):
        offset = steps - len(seq)
        idx[offset:, i] = seq
        active[offset:, i] = True

    h = constant(np.zeros((m, d)), like=X)
    for t in range(steps):
        h_new = gru_step(h, ops.gather_rows(X, idx[t]), params)
        if active[t].all():
            h = h_new
            continue
        on = np.repeat(active[t][:, None], d, axis=1).astype(X.values.dtype)
        h = ops.add(ops.hadamard(h_new, constant(on, like=X)), ops.hadamard(h, constant(1.0 - on, like=X)))

    return ops.scale(ops.add(X, h), 0.5)


def coarse_update(g: HierGraph, X: Tensor, W1: Tensor) -> Tensor:
    """x~_j = mean over members i of c_j of x_i W1."""
    _check_rows("coarse_update", g, X)
    avg = np.zeros((g.coarse_count, g.m))
    for j, members in enumerate(g.membership):
        if not members:
            raise ValueError(f"Coarse node {j} has no members")
        avg[j, list(members)] = 1.0 / len(members)
    return ops.matmul(constant(avg, like=X), ops.matmul(X, W1))


def hetero_attention(g: HierGraph, X: Tensor, Xc: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """α [m x c]: softmax over N(f_i) of (x_i W2)·(x~_j W3)/sqrt(d); zero outside N(f_i)."""
    _check_rows("hetero_attention", g, X)
    if Xc.ndim != 2 or Xc.shape[0] != g.coarse_count or Xc.shape[1] != X.shape[1]:
        raise ShapeError(f"hetero_attention: coarse features {Xc.shape} do not match {g.coarse_count} coarse nodes")
    d = X.shape[1]
    q = ops.matmul(X, params["W2"])
    k = ops.matmul(Xc, params["W3"])
    logits = ops.scale(ops.matmul(q, ops.transpose(k)), 1.0 / np.sqrt(d))

    mask = np.zeros((g.m, g.coarse_count), dtype=bool)
    for i, coarse in enumerate(g.coarse_of):
        if not coarse:
            raise ValueError(f"Fine node {i} belongs to no coarse node")
        mask[i, list(coarse)] = True
    return ops.softmax_rows(logits, mask)


def fine_hetero_update(g: HierGraph, X: Tensor, Xc: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """x_i <- mean(x_i, Σ_j α_ij x~_j)."""
    alpha = hetero_attention(g, X, Xc, params)
    return ops.scale(ops.add(X, ops.matmul(alpha, Xc)), 0.5)


def encode_device(g: HierGraph, params: ParamStore, cfg: ModelConfig) -> EncodedDevice:
    X = embed_nodes(g, params)
    for layer in range(cfg.fine_rounds):
        X = fine_message_round(g, X, params.slice(f"gru.{layer}"))
    for layer in range(cfg.hetero_rounds):
        hetero = params.slice(f"hetero.{layer}")
        Xc = coarse_update(g, X, hetero["W1"])
        X = fine_hetero_update(g, X, Xc, hetero)

    if not np.isfinite(X.values).all():
        raise FloatingPointError("encode_device produced non-finite embeddings")
    return EncodedDevice(X=X, node_keys=g.fine_nodes)
