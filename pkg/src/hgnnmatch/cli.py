"""
hgnn-match command line.

    hgnn-match <gen-data|build-graph|train|eval|score-pairs|compare-tiers> [flags]

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical abort.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from hgnnmatch.config.utils import resolve_run_config
from hgnnmatch.controller import COMMANDS, Controller
from hgnnmatch.errors import DataError, NumericalAbort, UsageError

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# (flag, type, help); every flag defaults to SUPPRESS so only explicit values override the config
_COMMON = [
    ("--seed", int, "root seed for every random stream"),
    ("--K", int, "coarse-to-fine ratio (default 6)"),
    ("--dim", int, "embedding size d (default 64)"),
    ("--lr", float, "learning rate (default 1e-3)"),
    ("--batch", int, "pairs per mini-batch (default 32)"),
    ("--epochs", int, "training epochs (default 20)"),
    ("--dropout", float, "dropout rate in the pooling head (default 0.2)"),
    ("--walk-len", int, "random-walk length of the shortcut tier (default 4)"),
    ("--threads", int, "worker threads for graph building and pair scoring"),
]

_SPECIFIC: dict[str, list[tuple[str, type, str]]] = {
    "gen-data": [
        ("--users", int, "number of synthetic users"),
        ("--devices-per-user", int, "devices per user"),
        ("--mean-log-len", int, "mean events per device"),
        ("--vocab", int, "URL vocabulary size"),
        ("--profile-dim", int, "URLs in each user's profile"),
        ("--noise", float, "probability of a stray URL per step"),
        ("--neg-ratio", float, "negatives per positive pair"),
        ("--test-fraction", float, "share of users held out for test_pairs.csv"),
    ],
    "build-graph": [("--logs", str, "device logs (JSON lines)")],
    "train": [
        ("--logs", str, "device logs (JSON lines)"),
        ("--pairs", str, "training pairs CSV"),
        ("--vocab", int, "minimum embedding vocabulary"),
        ("--fine-rounds", int, "GRU message-passing rounds"),
        ("--hetero-rounds", int, "coarse/fine attention rounds"),
        ("--pool-dim", int, "pooled vector size p"),
        ("--head", str, "match head: cross_attention or elementwise"),
        ("--cross-score", str, "cross-attention score: mean or dot"),
        ("--optimizer", str, "adam or sgd"),
    ],
    "eval": [
        ("--logs", str, "device logs (JSON lines)"),
        ("--pairs", str, "labelled test pairs CSV"),
        ("--checkpoint", str, "model.ckpt or its directory"),
    ],
    "score-pairs": [
        ("--logs", str, "device logs (JSON lines)"),
        ("--pairs", str, "pairs CSV"),
        ("--checkpoint", str, "model.ckpt or its directory"),
    ],
    "compare-tiers": [
        ("--logs", str, "device logs (JSON lines)"),
        ("--walks-per-node", int, "random walks started from each node"),
    ],
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hgnn-match", description="Cross-device user matching with hierarchical graph networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", type=Path, help="JSON settings file; explicit flags win")
        p.add_argument("--out", type=Path, help="output directory")
        for flag, kind, text in _COMMON + _SPECIFIC[command]:
            p.add_argument(flag, type=kind, default=argparse.SUPPRESS, help=text)
        if command == "score-pairs":
            p.add_argument("--symmetric", action="store_true", default=argparse.SUPPRESS, help="average both orders")
    return parser


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = vars(parser.parse_args(argv))
    except UsageError as err:
        print(f"hgnn-match: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    command, out, config_path = ns.pop("command"), ns.pop("out"), ns.pop("config")
    try:
        run = resolve_run_config(command, ns, out_dir=out, config_path=config_path)
        Controller(run)()
    except NumericalAbort as err:
        print(f"hgnn-match: numerical abort: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FloatingPointError as err:
        print(f"hgnn-match: numerical abort: non-finite values ({err})", file=sys.stderr)
        return EXIT_NUMERICAL
    except UsageError as err:
        print(f"hgnn-match: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as err:
        print(f"hgnn-match: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as err:
        print(f"hgnn-match: invalid configuration: {err}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())
