from .base_head import AbstractMatchHead
from .cross_attention import (
    CrossAttentionHead,
    CrossEncoding,
    MatchScore,
    classify_pair,
    cross_distance,
    cross_encode,
    feature_filter,
    match_pair,
    pool_embed,
    symmetric_score,
)
from .elementwise import ElementwiseHead
from .providers import get_match_head

__all__ = [
    "AbstractMatchHead",
    "CrossAttentionHead",
    "CrossEncoding",
    "ElementwiseHead",
    "MatchScore",
    "classify_pair",
    "cross_distance",
    "cross_encode",
    "feature_filter",
    "get_match_head",
    "match_pair",
    "pool_embed",
    "symmetric_score",
]
