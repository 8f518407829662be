from hgnnmatch.graph.logs import load_logs, write_logs

from .baseline import jaccard, jaccard_scores
from .pairs import (
    PairExample,
    read_pairs,
    read_users,
    sample_pairs,
    split_users,
    user_components,
    write_pairs,
    write_users,
)
from .synth import SynthConfig, generate_corpus, generate_dataset

__all__ = [
    "PairExample",
    "SynthConfig",
    "generate_corpus",
    "generate_dataset",
    "jaccard",
    "jaccard_scores",
    "load_logs",
    "read_pairs",
    "read_users",
    "sample_pairs",
    "split_users",
    "user_components",
    "write_logs",
    "write_pairs",
    "write_users",
]
