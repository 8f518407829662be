import logging
import os
from pathlib import Path

logger = logging.getLogger(__name__)

# root level
ROOT_DIR = Path(__file__).resolve().parents[3]

# Local settings via root .env (except in production)
if os.getenv("ENV") != "production":
    try:
        from dotenv import load_dotenv

        load_dotenv(ROOT_DIR / ".env", override=False)
    except ImportError:
        logger.debug("python-dotenv not installed; skipping .env")


## Data directory
def get_data_path(default_local: Path) -> Path:
    return Path(os.environ.get("HGNN_DATA_DIR", default_local))


DATA_DIR = get_data_path(ROOT_DIR / "data")
RUNS_DIR = DATA_DIR / "runs"

## Logging
LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}
DEFAULT_LOG_LEVEL = "info"

## Model
DEFAULT_K = 6  # coarse-to-fine ratio
DEFAULT_DIM = 64
DEFAULT_FINE_ROUNDS = 2
DEFAULT_HETERO_ROUNDS = 1
DEFAULT_DROPOUT = 0.2
DEFAULT_POOL_DIM = 64  # p, size of r_vw / r_wv
DEFAULT_HEAD = "cross_attention"
DEFAULT_CROSS_SCORE = "mean"

## Optimizer / training
DEFAULT_LR = 1e-3
DEFAULT_BATCH = 32
DEFAULT_EPOCHS = 20
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
VALIDATION_FRACTION = 0.1
BCE_CLAMP = 1e-7

## Evaluation
THRESHOLD_STEP = 0.01
N_THRESHOLDS = 101

## Random-walk shortcut tier
DEFAULT_WALK_LENGTH = 4
DEFAULT_WALKS_PER_NODE = 1

## Synthetic corpus
DEFAULT_USERS = 500
DEFAULT_DEVICES_PER_USER = 2
DEFAULT_MEAN_LOG_LEN = 197
DEFAULT_VOCAB = 400
DEFAULT_PROFILE_DIM = 20
DEFAULT_NOISE = 0.3
TEST_USER_FRACTION = 0.1

## Checkpoint container
CHECKPOINT_MAGIC = b"HGNNCKPT"
CHECKPOINT_VERSION = 1

DEFAULT_SEED = 7
