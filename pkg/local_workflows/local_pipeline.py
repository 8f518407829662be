import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any

from hgnnmatch.cli import dispatch
from hgnnmatch.config.utils import resolve_run_config
from hgnnmatch.controller import Controller

logger = logging.getLogger(__name__)


def run_command(command: str, flags: dict[str, Any], out_dir: Path) -> dict[str, Path]:
    logger.info("Preparing to run %r with flags: %s", command, flags)
    try:
        artifacts = Controller(resolve_run_config(command, flags, out_dir=out_dir))()
        logger.info("%s finished, outputs in %s", command, out_dir)
        return artifacts
    except Exception:
        logger.exception("Command %r failed", command)
        raise


def pipeline(base: Path, seed: int, synth: dict[str, Any], training: dict[str, Any]) -> dict[str, Path]:
    """Same steps as prefect/matching_pipeline_flow.py, without Prefect."""
    data = run_command("gen-data", {"seed": seed, **synth}, base / "data")
    model = run_command(
        "train", {"seed": seed, "logs": str(data["logs"]), "pairs": str(data["pairs"]), **training}, base / "train"
    )
    report = run_command(
        "eval",
        {"logs": str(data["logs"]), "pairs": str(data["test_pairs"]), "checkpoint": str(model["checkpoint"])},
        base / "eval",
    )
    run_command("compare-tiers", {"seed": seed, "logs": str(data["logs"])}, base / "tiers")
    return report


TINY_SYNTH = {"users": 12, "mean_log_len": 20, "vocab": 40, "profile_dim": 6, "test_fraction": 0.25}
TINY_TRAINING = {"dim": 8, "pool_dim": 8, "epochs": 2, "batch": 8}


def test_local():
    logging.basicConfig(
        level=logging.DEBUG,
        format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
        handlers=[logging.StreamHandler(sys.stdout)],
        force=True,
    )
    base = Path(os.environ.get("HGNN_LOCAL_RUN", "data/runs/local_pipeline"))
    pipeline(base, seed=7, synth={"users": 60}, training={"epochs": 3})


def test_ci() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        base = Path(tmp)
        report = pipeline(base, seed=7, synth=TINY_SYNTH, training=TINY_TRAINING)
        if not report["summary"].exists():
            return 1
        # the CLI path must reproduce the same data bit for bit
        code = dispatch(["gen-data", "--out", str(base / "cli"), "--config", str(base / "data" / "run_config.json")])
        if code != 0:
            return code
        same = (base / "cli" / "logs.jsonl").read_bytes() == (base / "data" / "logs.jsonl").read_bytes()
        return 0 if same else 1


if __name__ == "__main__":
    test_local()
