"""
Cross-attention matching head.

For a device pair (v, w) with node embeddings X_v [m_v x d] and X_w [m_w x d]:

    A_vw = softmax_rows(score(X_v W3', X_w W3'))        [m_v x m_w]
    β_v  = sigmoid(mean_rows(tanh(X_v W5) W4))          [d], a per-feature gate
    L_vw = (β_v * (A_vw X_w - X_v))^2                   [m_v x d]
    r_vw = ReLU(dropout(max_rows(MLP(L_vw))))           [p]
    ŷ    = sigmoid(MLP([r_vw ; r_wv]))

`score="mean"` averages the two projected rows' features, `score="dot"` is a scaled dot product.
Under `mean` the logit for (i, j) is a_i + b_j, and the row softmax cancels a_i, so every row of
A_vw is the same distribution over w's nodes. This is intended: the pair signal then comes from
L_vw comparing each X_v row against one shared summary of X_w. Use `dot` for per-row alignment.
"""

import logging
from dataclasses import dataclass

import numpy as np

from hgnnmatch.autodiff import ops
from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.autodiff.tensor import Tensor, constant
from hgnnmatch.errors import ShapeError
from hgnnmatch.model.config import ModelConfig
from hgnnmatch.model.heads.base_head import AbstractMatchHead

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrossEncoding:
    A_vw: Tensor
    A_wv: Tensor
    beta_v: Tensor
    beta_w: Tensor


@dataclass(frozen=True)
class MatchScore:
    L_vw: Tensor
    L_wv: Tensor
    r_vw: Tensor
    r_wv: Tensor
    prob: Tensor

    @property
    def y_hat(self) -> float:
        return self.prob.item()


def _check_pair(X_v: Tensor, X_w: Tensor) -> None:
    if X_v.ndim != 2 or X_w.ndim != 2:
        raise ShapeError(f"Expected embedding matrices, got {X_v.shape} and {X_w.shape}")
    if X_v.shape[0] == 0 or X_w.shape[0] == 0:
        raise ValueError("Cannot match an empty embedding matrix")
    if X_v.shape[1] != X_w.shape[1]:
        raise ShapeError(f"Embedding widths differ: {X_v.shape[1]} vs {X_w.shape[1]}")


def _cross_logits(P_a: Tensor, P_b: Tensor, score: str) -> Tensor:
    d = P_a.shape[1]
    if score == "dot":
        return ops.scale(ops.matmul(P_a, ops.transpose(P_b)), 1.0 / np.sqrt(d))
    if score != "mean":
        raise ValueError(f"Unsupported cross score: {score!r}. Supported: ['mean', 'dot']")
    # mean(p_i, p_j) reduced over features: 0.5 * (mean(p_i) + mean(p_j))
    avg = constant(np.full((d, 1), 1.0 / d), like=P_a)
    a = ops.matmul(P_a, avg)
    b = ops.matmul(P_b, avg)
    ones_b = constant(np.ones((1, P_b.shape[0])), like=P_a)
    ones_a = constant(np.ones((P_a.shape[0], 1)), like=P_a)
    return ops.scale(ops.add(ops.matmul(a, ones_b), ops.matmul(ones_a, ops.transpose(b))), 0.5)


def feature_filter(X: Tensor, params: ParamStore) -> Tensor:
    gated = ops.matmul(ops.tanh(ops.matmul(X, params["filter.W5"])), params["filter.W4"])
    return ops.sigmoid(ops.mean_pool_rows(gated))


def cross_encode(X_v: Tensor, X_w: Tensor, params: ParamStore, score: str = "mean") -> CrossEncoding:
    _check_pair(X_v, X_w)
    W = params["cross.W3"]
    P_v = ops.matmul(X_v, W)
    P_w = ops.matmul(X_w, W)
    return CrossEncoding(
        A_vw=ops.softmax_rows(_cross_logits(P_v, P_w, score)),
        A_wv=ops.softmax_rows(_cross_logits(P_w, P_v, score)),
        beta_v=feature_filter(X_v, params),
        beta_w=feature_filter(X_w, params),
    )


def _filtered_distance(A: Tensor, X_other: Tensor, X_self: Tensor, beta: Tensor) -> Tensor:
    if A.shape != (X_self.shape[0], X_other.shape[0]):
        raise ShapeError(f"Attention {A.shape} does not align with {X_self.shape} and {X_other.shape}")
    gated = ops.hadamard(ops.sub(ops.matmul(A, X_other), X_self), beta)
    return ops.hadamard(gated, gated)


def cross_distance(X_v: Tensor, X_w: Tensor, enc: CrossEncoding) -> tuple[Tensor, Tensor]:
    return (
        _filtered_distance(enc.A_vw, X_w, X_v, enc.beta_v),
        _filtered_distance(enc.A_wv, X_v, X_w, enc.beta_w),
    )


def pool_embed(
    L: Tensor,
    params: ParamStore,
    training: bool = False,
    rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Tensor:
    if L.ndim != 2 or L.shape[0] == 0:
        raise ValueError(f"pool_embed needs a non-empty matrix, got shape {L.shape}")
    hidden = ops.relu(ops.linear(L, params["pool.W1"], params["pool.b1"]))
    pooled = ops.max_pool_rows(ops.linear(hidden, params["pool.W2"], params["pool.b2"]))
    return ops.relu(ops.dropout(pooled, rate, rng, training))


def classify_pair(r_vw: Tensor, r_wv: Tensor, params: ParamStore) -> Tensor:
    if r_vw.shape != r_wv.shape or r_vw.ndim != 1:
        raise ShapeError(f"classify_pair: pooled vectors differ: {r_vw.shape} vs {r_wv.shape}")
    z = ops.reshape(ops.concat_rows(r_vw, r_wv), (1, 2 * r_vw.shape[0]))
    hidden = ops.relu(ops.linear(z, params["clf.W1"], params["clf.b1"]))
    logit = ops.linear(hidden, params["clf.W2"], params["clf.b2"])
    return ops.sigmoid(ops.reshape(logit, (1,)))


def match_pair(
    X_v: Tensor,
    X_w: Tensor,
    params: ParamStore,
    cfg: ModelConfig,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> MatchScore:
    enc = cross_encode(X_v, X_w, params, cfg.cross_score)
    L_vw, L_wv = cross_distance(X_v, X_w, enc)
    r_vw = pool_embed(L_vw, params, training, cfg.dropout, rng)
    r_wv = pool_embed(L_wv, params, training, cfg.dropout, rng)
    return MatchScore(L_vw, L_wv, r_vw, r_wv, classify_pair(r_vw, r_wv, params))


def symmetric_score(X_v: Tensor, X_w: Tensor, params: ParamStore, cfg: ModelConfig) -> float:
    """Order-independent inference score: mean of ŷ(v, w) and ŷ(w, v)."""
    forward = match_pair(X_v, X_w, params, cfg).y_hat
    reverse = match_pair(X_w, X_v, params, cfg).y_hat
    return 0.5 * (forward + reverse)


class CrossAttentionHead(AbstractMatchHead):
    name = "cross_attention"

    def init_params(self, store: ParamStore, cfg: ModelConfig) -> None:
        d, p = cfg.d, cfg.pool_dim
        store.add_weight("cross.W3", (d, d))
        store.add_weight("filter.W5", (d, d))
        store.add_weight("filter.W4", (d, d))
        store.add_weight("pool.W1", (d, p))
        store.add_bias("pool.b1", p)
        store.add_weight("pool.W2", (p, p))
        store.add_bias("pool.b2", p)
        store.add_weight("clf.W1", (2 * p, p))
        store.add_bias("clf.b1", p)
        store.add_weight("clf.W2", (p, 1))
        store.add_bias("clf.b2", 1)

    def forward(self, X_v, X_w, params, cfg, training=False, rng=None) -> Tensor:
        return match_pair(X_v, X_w, params, cfg, training, rng).prob
