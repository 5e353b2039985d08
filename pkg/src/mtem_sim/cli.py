"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import validate_config
from .errors import MtemError, ValidationError
from .experiments import run_validated
from .systems import SYSTEM_REGISTRY


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtem-sim",
        description=(
            "Simulate slow-fast SDEs with the multiscale truncated "
            "Euler-Maruyama scheme and run its diagnostic experiments."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="validate a config file and run it")
    run_p.add_argument("config", help="path to a JSON experiment config")

    val_p = sub.add_parser("validate", help="validate a config file only")
    val_p.add_argument("config", help="path to a JSON experiment config")

    sub.add_parser("list-systems", help="list registered coefficient families")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-systems":
        for family in SYSTEM_REGISTRY.values():
            print(f"{family.name}: {family.description}")
        return 0

    try:
        cfg = validate_config(args.config)
    except ValidationError as exc:
        print("config validation failed:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return 1

    if args.command == "validate":
        print(f"config ok: {cfg.experiment} on {cfg.system_name}")
        return 0

    try:
        bundle = run_validated(cfg)
    except MtemError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    print(f"experiment: {bundle.manifest['experiment']}")
    print(f"seed: {bundle.manifest['seed']}  threads: {bundle.manifest['threads']}")
    print(f"wall seconds: {bundle.manifest['wall_seconds']:.2f}")
    for key, value in bundle.manifest["summary"].items():
        print(f"{key}: {value}")
    for path in bundle.csv_paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
