"""Command-line entry point: ``liouville-gf {run,oracle,report}``."""

from __future__ import annotations

import argparse
import sys

from .config import OUTPUT_ROOT_ENV, ConfigError, parse_overrides
from .pipeline import EXIT_CONFIG, cmd_oracle, cmd_report, cmd_run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liouville-gf",
        description="Liouvillian recursion Green's functions for the 1-D Hubbard model.",
        epilog=f"Relative output directories are resolved against ${OUTPUT_ROOT_ENV} when set.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (
        ("run", "run the recursion for every cell of the config"),
        ("oracle", "write exact-diagonalization references"),
    ):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("config", help="INI config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override one config value (repeatable)")
        p.add_argument("--output", help="output directory (overrides output.output_dir)")
    p = sub.add_parser("report", help="aggregate run outputs into figure data")
    p.add_argument("output_dir")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "report":
        return cmd_report(args.output_dir)
    try:
        overrides = parse_overrides(args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fn = cmd_run if args.verb == "run" else cmd_oracle
    return fn(args.config, overrides, args.output)


if __name__ == "__main__":
    sys.exit(main())
