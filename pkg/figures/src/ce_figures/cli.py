"""Entry point: render figures from a simulator run directory."""

from __future__ import annotations

import argparse
import os
import sys

from .artifacts import SchemaError
from .figures import FIGURES, render_many


def _figure_list(text: str):
    try:
        ids = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--figures wants comma-separated integers, got {text!r}")
    if not ids:
        raise argparse.ArgumentTypeError("--figures list is empty")
    return ids


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="render_figures",
        description="Render band time series, density surfaces and bound "
                    "curves from a simulator run directory.")
    ap.add_argument("run_dir", help="directory with totals.csv etc.")
    ap.add_argument("--figures", type=_figure_list,
                    default=list(sorted(FIGURES)),
                    help="comma-separated figure ids "
                         f"(default: {','.join(map(str, sorted(FIGURES)))})")
    ap.add_argument("--format", choices=("png", "svg"), default="png")
    ap.add_argument("--out", default=None,
                    help="output directory (default: the run directory)")
    args = ap.parse_args(argv)

    if not os.path.isdir(args.run_dir):
        print(f"error: {args.run_dir} is not a directory", file=sys.stderr)
        return 1
    out_dir = args.out or args.run_dir
    try:
        paths = render_many(args.figures, args.run_dir, out_dir, args.format)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
