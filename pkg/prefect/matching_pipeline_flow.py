import logging
from pathlib import Path
from typing import Any

from prefect import flow, get_run_logger, task

from hgnnmatch.config import config
from hgnnmatch.config.utils import resolve_run_config
from hgnnmatch.controller import Controller

logging.getLogger("hgnnmatch").setLevel(logging.INFO)


@task
def run_command_task(command: str, flags: dict[str, Any], out_dir: Path) -> dict[str, str]:
    logger = get_run_logger()
    logger.info("Preparing to run %r with flags: %s", command, flags)

    try:
        run = resolve_run_config(command, flags, out_dir=out_dir)
        artifacts = Controller(run)()
        logger.info("%s finished, outputs in %s", command, out_dir)
        return {name: str(path) for name, path in artifacts.items()}

    except Exception:
        logger.exception("Task failed for command %r", command)
        raise


@flow(name="matching_pipeline_flow")
def matching_pipeline_flow(
    root: str | None = None,
    seed: int = config.DEFAULT_SEED,
    synth: dict | None = None,
    training: dict | None = None,
) -> dict[str, str]:
    """gen-data -> train -> eval on the held-out users -> compare-tiers, each step in its own run directory."""
    logger = get_run_logger()
    base = Path(root) if root else config.RUNS_DIR / f"pipeline_seed{seed}"
    logger.info("Running matching_pipeline_flow into %s", base)

    data = run_command_task("gen-data", {"seed": seed, **(synth or {})}, base / "data")
    model = run_command_task(
        "train",
        {"seed": seed, "logs": data["logs"], "pairs": data["pairs"], **(training or {})},
        base / "train",
    )
    report = run_command_task(
        "eval",
        {"logs": data["logs"], "pairs": data["test_pairs"], "checkpoint": model["checkpoint"]},
        base / "eval",
    )
    run_command_task("compare-tiers", {"seed": seed, "logs": data["logs"]}, base / "tiers")
    return report
