import numpy as np

from hgnnmatch.autodiff.tensor import Tensor, constant, record
from hgnnmatch.config import config


def bce_loss(y_hat: Tensor | float, y: float, clamp: float = config.BCE_CLAMP) -> Tensor:
    """
    -[y ln ŷ + (1 - y) ln(1 - ŷ)] with ŷ clamped to [clamp, 1 - clamp].
    Outside the clamp range the loss is flat, so the gradient there is zero.
    """
    if y not in (0, 1):
        raise ValueError(f"Label must be 0 or 1, got {y!r}")
    if not isinstance(y_hat, Tensor):
        y_hat = constant(np.asarray([y_hat], dtype=np.float64))

    raw = y_hat.values
    p = np.clip(raw, clamp, 1.0 - clamp)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    inside = (raw >= clamp) & (raw <= 1.0 - clamp)
    dp = np.where(inside, (p - y) / (p * (1.0 - p)), 0.0)

    out = Tensor(loss, dtype=raw.dtype)
    return record("bce_loss", out, (y_hat,), lambda g: (g * dp,))
