"""Top-level package for hgnn-match."""

# All imports must go before any code execution (incl. logging setup!)
import logging
import os

from . import config as config
from .config import config as _cfg

__version__ = "0.1.0"

_level_name = os.getenv("HGNN_LOG_LEVEL", _cfg.DEFAULT_LOG_LEVEL).lower()

logging.basicConfig(
    level=_cfg.LOG_LEVELS.get(_level_name, logging.INFO),
    format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
)

if _level_name not in _cfg.LOG_LEVELS:
    logging.getLogger(__name__).warning(
        "Unknown HGNN_LOG_LEVEL %r; expected one of %s. Using 'info'.", _level_name, list(_cfg.LOG_LEVELS)
    )

__all__ = [
    "__version__",
    "config",
]
