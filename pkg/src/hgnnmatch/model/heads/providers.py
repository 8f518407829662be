from .base_head import AbstractMatchHead
from .cross_attention import CrossAttentionHead
from .elementwise import ElementwiseHead

_HEADS: dict[str, type[AbstractMatchHead]] = {
    "cross_attention": CrossAttentionHead,
    "elementwise": ElementwiseHead,
}


def get_match_head(name: str) -> AbstractMatchHead:
    try:
        return _HEADS[name]()
    except KeyError as err:
        raise ValueError(f"Unsupported match head: {name!r}. Supported: {list(_HEADS)}") from err
