"""Command-line surface: render figures and summarize final returns.

Subcommands:
  render     one learning-curve figure per scenario from metrics CSVs
  summarize  final-return table (mean +- std over seeds) per variant

Both read every CSV matching --in and validate all of them against the
documented schema before writing anything, so a malformed input never
leaves partial output behind.
"""

from __future__ import annotations

import argparse
import sys

from .curves import aggregate_curves
from .figures import render_figures
from .schema import SchemaError, load_glob
from .summary import format_table, summarize, write_summary_csv


def _cmd_render(args) -> int:
    rows = load_glob(args.infile)
    groups = aggregate_curves(rows)
    if not groups:
        print(f"no metrics rows matched {args.infile!r}; nothing to render")
        return 0
    written = render_figures(groups, args.out, dpi=args.dpi)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_summarize(args) -> int:
    rows = load_glob(args.infile)
    table = summarize(rows)
    print(format_table(table))
    if args.out_csv:
        write_summary_csv(table, args.out_csv)
        print(f"wrote {args.out_csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Figures and summary tables from wncs metrics CSVs.")
    subs = parser.add_subparsers(dest="command", required=True)

    render = subs.add_parser("render",
                             help="one figure per scenario, one banded "
                                  "curve per variant")
    render.add_argument("--in", dest="infile", required=True,
                        help="glob of metrics CSVs, e.g. "
                             "'runs/**/metrics.csv'")
    render.add_argument("--out", required=True, help="figure directory")
    render.add_argument("--dpi", type=int, default=150,
                        help="figure resolution (default 150)")

    summ = subs.add_parser("summarize",
                           help="final-return mean +- std per variant")
    summ.add_argument("--in", dest="infile", required=True,
                      help="glob of metrics CSVs")
    summ.add_argument("--out-csv", help="also write the table as CSV")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "render":
            return _cmd_render(args)
        if args.command == "summarize":
            return _cmd_summarize(args)
        parser.error(f"unknown command {args.command!r}")
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
