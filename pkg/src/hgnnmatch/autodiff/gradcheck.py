from collections.abc import Callable, Iterable

import numpy as np

from hgnnmatch.autodiff.params import ParamStore

DEFAULT_EPS = 1e-5


def finite_diff_grad(
    f: Callable[[ParamStore], float], store: ParamStore, eps: float = DEFAULT_EPS, names: Iterable[str] | None = None
) -> dict[str, np.ndarray]:
    """Central differences (f(θ+eps) - f(θ-eps)) / 2eps per scalar parameter; values are restored exactly."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")

    estimates: dict[str, np.ndarray] = {}
    for name in names if names is not None else list(store):
        arr = store[name].values
        est = np.zeros_like(arr, dtype=np.float64)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + eps
            f_plus = float(f(store))
            arr[idx] = orig - eps
            f_minus = float(f(store))
            arr[idx] = orig
            est[idx] = (f_plus - f_minus) / (2.0 * eps)
        estimates[name] = est
    return estimates


def max_relative_error(analytic: dict[str, np.ndarray], numeric: dict[str, np.ndarray], floor: float = 1e-8) -> float:
    """max |a - n| / max(|a|, |n|, floor) over every scalar of every named parameter."""
    worst = 0.0
    for name, n in numeric.items():
        a = analytic[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)) if a.size else 0.0)
    return worst
