import logging

from hgnnmatch.autodiff.gru import GRU_BIASES, GRU_WEIGHTS
from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.model.config import ModelConfig
from hgnnmatch.model.heads.providers import get_match_head

logger = logging.getLogger(__name__)


def init_params(cfg: ModelConfig) -> ParamStore:
    """
    Allocation order is fixed (embedding, GRU layers, hetero layers, head) so a seed always
    maps to the same values. Parameter tally for d = p = 64, two fine and one hetero round:

        embedding      V*d
        GRU, per round 6*d^2 + 3*d          -> 2 * 24768 = 49536
        hetero         3*d^2                -> 12288
        cross/filter   3*d^2                -> 12288
        pool MLP       d*p + p + p^2 + p    -> 8320
        classifier     2*p^2 + p + p + 1    -> 8321

    i.e. 64*V + 90753 (154753 for V = 1000).
    """
    if cfg.vocab_size < 1:
        raise ValueError(f"vocab_size must be >= 1, got {cfg.vocab_size}")

    d = cfg.d
    store = ParamStore(seed=cfg.seed, dtype=cfg.dtype)
    store.add_embedding("embedding", (cfg.vocab_size, d))

    for layer in range(cfg.fine_rounds):
        for name in GRU_WEIGHTS:
            store.add_weight(f"gru.{layer}.{name}", (d, d))
        for name in GRU_BIASES:
            store.add_bias(f"gru.{layer}.{name}", d)

    for layer in range(cfg.hetero_rounds):
        for name in ("W1", "W2", "W3"):
            store.add_weight(f"hetero.{layer}.{name}", (d, d))

    get_match_head(cfg.head).init_params(store, cfg)
    logger.debug("Initialized %d parameters in %d tensors (seed=%d)", store.num_parameters(), len(store), cfg.seed)
    return store
