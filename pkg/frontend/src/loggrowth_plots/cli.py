"""``plots --figure <id> --in <dir> --out <file>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_IDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from loggrowth experiment CSVs")
    parser.add_argument("--figure", required=True, choices=FIGURE_IDS)
    parser.add_argument("--in", dest="in_dir", type=Path, required=True,
                        help="directory holding the experiment CSVs")
    parser.add_argument("--out", type=Path, required=True,
                        help="output image path (SVG)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(figure_id=args.figure, in_dir=args.in_dir,
                          out_path=args.out)
        path = render(spec)
    except SchemaError as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
