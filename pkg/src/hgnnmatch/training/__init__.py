from .evaluation import (
    EvalReport,
    evaluate_threshold_sweep,
    pr_curve_export,
    read_pr_curve,
    score_pairs,
    sweep_scores,
    write_eval_outputs,
)
from .loss import bce_loss
from .optimizers import SGD, Adam, OptimizerConfig, get_optimizer
from .trainer import PairDataset, TrainResult, split_validation, train

__all__ = [
    "SGD",
    "Adam",
    "EvalReport",
    "OptimizerConfig",
    "PairDataset",
    "TrainResult",
    "bce_loss",
    "evaluate_threshold_sweep",
    "get_optimizer",
    "pr_curve_export",
    "read_pr_curve",
    "score_pairs",
    "split_validation",
    "sweep_scores",
    "train",
    "write_eval_outputs",
]
