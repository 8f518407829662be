from .config import ModelConfig
from .heads import CrossEncoding, MatchScore, get_match_head
from .hgnn import EncodedDevice, coarse_update, embed_nodes, encode_device, fine_hetero_update, fine_message_round
from .matcher import Matcher
from .params import init_params
from .shortcut_tier import TierTiming, shortcut_message_round, time_tier_rounds

__all__ = [
    "CrossEncoding",
    "EncodedDevice",
    "MatchScore",
    "Matcher",
    "ModelConfig",
    "TierTiming",
    "coarse_update",
    "embed_nodes",
    "encode_device",
    "fine_hetero_update",
    "fine_message_round",
    "get_match_head",
    "init_params",
    "shortcut_message_round",
    "time_tier_rounds",
]
