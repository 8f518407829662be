"""Ablation head: mean-pool each device, multiply the two vectors, classify with a small MLP."""

from hgnnmatch.autodiff import ops
from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.autodiff.tensor import Tensor
from hgnnmatch.errors import ShapeError
from hgnnmatch.model.config import ModelConfig
from hgnnmatch.model.heads.base_head import AbstractMatchHead


class ElementwiseHead(AbstractMatchHead):
    name = "elementwise"

    def init_params(self, store: ParamStore, cfg: ModelConfig) -> None:
        store.add_weight("ablation.W1", (cfg.d, cfg.pool_dim))
        store.add_bias("ablation.b1", cfg.pool_dim)
        store.add_weight("ablation.W2", (cfg.pool_dim, 1))
        store.add_bias("ablation.b2", 1)

    def forward(self, X_v, X_w, params, cfg, training=False, rng=None) -> Tensor:
        if X_v.ndim != 2 or X_w.ndim != 2 or X_v.shape[1] != X_w.shape[1]:
            raise ShapeError(f"Embedding matrices do not conform: {X_v.shape} vs {X_w.shape}")
        if X_v.shape[0] == 0 or X_w.shape[0] == 0:
            raise ValueError("Cannot match an empty embedding matrix")
        joint = ops.hadamard(ops.mean_pool_rows(X_v), ops.mean_pool_rows(X_w))
        z = ops.reshape(joint, (1, cfg.d))
        hidden = ops.relu(ops.linear(z, params["ablation.W1"], params["ablation.b1"]))
        hidden = ops.dropout(hidden, cfg.dropout, rng, training)
        logit = ops.linear(hidden, params["ablation.W2"], params["ablation.b2"])
        return ops.sigmoid(ops.reshape(logit, (1,)))
