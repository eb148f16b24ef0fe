"""
Command-line front-end: mnl-bai run | lower-bound | verify
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from config import Config, config
from src.errors import MnlBaiError, OutputError
from src.experiments import load_instance, load_spec, run_experiment
from src.models import AggregateRow
from src.theory import lower_bound_value
from src.utils import setup_logging

logger = logging.getLogger(__name__)

USAGE_ERROR = 2
IO_ERROR = 1
TESTS_DIR = Path(__file__).resolve().parent.parent / "tests"


def _print_rows(rows: Sequence[AggregateRow]) -> None:
    print(f"{'strategy':<18} {'axis':>4} {'value':>6} {'seeds':>5} {'mean tau':>14} {'stderr':>12} {'correct':>8}")
    print("-" * 73)
    for row in rows:
        print(
            f"{row.strategy:<18} {row.grid_axis:>4} {row.grid_value:>6g} {row.n_seeds:>5} "
            f"{row.mean_tau:>14.1f} {row.stderr_tau:>12.1f} {row.frac_correct:>8.2f}"
        )


def cmd_run(args: argparse.Namespace) -> int:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = spec.model_copy(update={"base_seed": args.seed})
    out_dir = args.out or spec.out_dir or Config.OUTPUT_DIR

    config.print_status()
    rows, _ = run_experiment(spec, out_dir=out_dir, jobs=args.jobs, full_scale=args.full_scale)
    _print_rows(rows)
    print(f"\nOutputs written to {out_dir}")
    return 0


def cmd_lower_bound(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    report = lower_bound_value(instance, args.epsilon, args.delta)
    print(report.model_dump_json(indent=2))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    import pytest

    return int(pytest.main(["-q", "-m", "not slow", str(TESTS_DIR)]))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mnl-bai",
        description="Best-arm identification under linear MNL preference feedback",
    )
    parser.add_argument("--log-level", default=Config.LOG_LEVEL, help="root log level")
    parser.add_argument("--json-logs", action="store_true", default=Config.LOG_FORMAT == "json",
                        help="emit JSON log records")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment spec")
    run.add_argument("--spec", required=True, help="ExperimentSpec JSON file")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--full-scale", action="store_true", help="use the full-scale grids and seed counts")
    run.add_argument("--seed", type=int, default=None, help="override the spec's base seed")
    run.add_argument("--jobs", type=int, default=Config.JOBS, help="worker processes")
    run.set_defaults(handler=cmd_run)

    bound = sub.add_parser("lower-bound", help="evaluate the stopping-time lower bound of an instance")
    bound.add_argument("--instance", required=True, help="Instance JSON file")
    bound.add_argument("--epsilon", type=float, required=True, help="perturbation slack")
    bound.add_argument("--delta", type=float, default=None, help="confidence level (default: the instance's)")
    bound.set_defaults(handler=cmd_lower_bound)

    verify = sub.add_parser("verify", help="run the fast test subset")
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, json_format=args.json_logs)

    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return USAGE_ERROR
    try:
        return args.handler(args)
    except OutputError as e:
        print(f"error: {e}", file=sys.stderr)
        return IO_ERROR
    except (MnlBaiError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
