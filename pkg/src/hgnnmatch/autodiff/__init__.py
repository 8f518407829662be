from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import finite_diff_grad
from .gru import gru_step
from .ops import (
    add,
    concat_rows,
    dropout,
    elementwise,
    gather_rows,
    hadamard,
    linear,
    matmul,
    max_pool_rows,
    mean_pool_rows,
    relu,
    reshape,
    scale,
    sigmoid,
    softmax_rows,
    sub,
    sum_all,
    tanh,
    transpose,
)
from .params import ParamStore
from .tensor import Tape, Tensor, backward, constant

__all__ = [
    "ParamStore",
    "Tape",
    "Tensor",
    "add",
    "backward",
    "concat_rows",
    "constant",
    "dropout",
    "elementwise",
    "finite_diff_grad",
    "gather_rows",
    "gru_step",
    "hadamard",
    "linear",
    "load_checkpoint",
    "matmul",
    "max_pool_rows",
    "mean_pool_rows",
    "relu",
    "reshape",
    "save_checkpoint",
    "scale",
    "sigmoid",
    "softmax_rows",
    "sub",
    "sum_all",
    "tanh",
    "transpose",
]
