"""Command-line front end.

    powerlimits run <config.json> [--seed N] [--samples S] [--out PATH]
                                  [--format csv|json]
    powerlimits list

``run`` executes one experiment described by a JSON config (flags
override the file's fields), prints the report, and exits 0 iff the
summary passes.  ``list`` enumerates the experiment kinds.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import EXPERIMENT_KINDS, ConfigError, ExperimentConfig, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powerlimits",
                                     description="power-map limit experiments on compact matrix groups")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment config")
    runp.add_argument("config", type=Path, help="path to a JSON experiment config")
    runp.add_argument("--seed", type=int, default=None, help="override the config seed")
    runp.add_argument("--samples", type=int, default=None, help="override the sample size")
    runp.add_argument("--out", type=Path, default=None, help="write the report here")
    runp.add_argument("--format", choices=("json", "csv"), default="json",
                      help="report format (default json)")
    sub.add_parser("list", help="list experiment kinds")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        for name in sorted(EXPERIMENT_KINDS):
            print(f"{name:22s} {EXPERIMENT_KINDS[name]}")
        return 0
    try:
        config = ExperimentConfig.from_json(args.config.read_text())
        if args.seed is not None:
            config.seed = args.seed
        if args.samples is not None:
            config.samples = args.samples
        config.validate()
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_experiment(config)
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out is not None:
        args.out.write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    print(f"summary: {'PASS' if report.summary_pass else 'FAIL'}", file=sys.stderr)
    return 0 if report.summary_pass else 1


if __name__ == "__main__":
    raise SystemExit(main())
