"""Command-line entry point ``kwlab``.

Exit status: 0 when every record passes, 1 when a check fails, 2 for usage
or configuration errors.
"""

import argparse
import os
import sys

from .config import parse_config
from .errors import ConfigError
from .suite import COMMANDS, run_suite


def build_parser():
    p = argparse.ArgumentParser(prog="kwlab", description="Verification lab for the reduced "
                                "Kapustin-Witten equations and their explicit solutions.")
    sub = p.add_subparsers(dest="command", metavar="command")
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", metavar="PATH", help="config file of 'section.key = value' lines")
        s.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                       help="override a config key (repeatable)")
        s.add_argument("--out", metavar="DIR", help="write the report and data CSVs here")
        s.add_argument("--seed", type=int, help="shorthand for --set run.seed=N")
        s.add_argument("--format", choices=("csv", "json"), default="json")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    try:
        cfg = parse_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"kwlab: {exc}", file=sys.stderr)
        return 2
    report = run_suite(cfg, args.command, args.out)
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.out:
        with open(os.path.join(args.out, f"report.{args.format}"), "w") as fh:
            fh.write(text)
        for r in report.records:
            print(f"{r.status:5s} {r.name} = {r.value}")
    else:
        sys.stdout.write(text)
    return 0 if report.ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
