"""Command-line figure rendering: one subcommand per figure, each taking an
input CSV and an output image path."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_IDS, FigureSpec, SchemaError, render

EXIT_OK = 0
EXIT_INPUT = 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="wsnplots",
        description="Render figures from wsnloc experiment CSVs",
    )
    sub = parser.add_subparsers(dest="figure_id", required=True)
    for fid in FIGURE_IDS:
        p = sub.add_parser(fid, help=f"render the {fid} figure")
        p.add_argument("input", help="input CSV path")
        p.add_argument("--out", required=True, help="output image path")
        p.add_argument("--dpi", type=int, default=150)
        p.add_argument("--title")
        if fid == "scan":
            p.add_argument("--min-bin-samples", dest="min_bin_samples",
                           type=int, default=30,
                           help="samples required per vertex-count bin")
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_INPUT
    spec = FigureSpec(
        figure_id=args.figure_id,
        input_path=args.input,
        output_path=args.out,
        dpi=args.dpi,
        title=args.title,
        min_bin_samples=getattr(args, "min_bin_samples", 30),
    )
    try:
        render(spec)
    except (SchemaError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
