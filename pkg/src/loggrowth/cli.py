"""Command-line entry point: ``loggrowth <subcommand>``.

Subcommands ``constants``, ``exp1``, ``exp2``, ``exp3``, ``exp4`` write
deterministic CSV artifacts into the output directory.  Exit code is 0 on
success; on failure the violated invariant is named on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .densities import BUILTIN_IDS
from .errors import LogGrowthError
from .experiments import (
    ExperimentConfig,
    run_constants,
    run_exp1,
    run_exp2,
    run_exp3,
    run_exp4,
)

_RUNNERS = {
    "constants": run_constants,
    "exp1": run_exp1,
    "exp2": run_exp2,
    "exp3": run_exp3,
    "exp4": run_exp4,
}


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loggrowth",
        description="Log-growth gain learning: constants report and experiment suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--density", default="all",
                       help="density id D1..D4 or 'all' (exp3 default: D2)")
        p.add_argument("--seeds", type=int, default=None,
                       help="number of seeds (default: nominal count times scale)")
        p.add_argument("--scale", type=float, default=0.25,
                       help="desk-scale multiplier on sample sizes (default 0.25)")
        p.add_argument("--out", type=Path, default=Path("results"),
                       help="output directory for CSV files")
        p.add_argument("--seed-base", type=int, default=0,
                       help="base entropy for all random streams")
        p.add_argument("--eta-grid", type=_float_list, default=None,
                       help="comma-separated accuracy grid (exp3)")
        p.add_argument("--eps-grid", type=_float_list, default=None,
                       help="comma-separated regularization grid (exp1)")
        p.add_argument("--estimator", choices=["naive", "paired", "plugin", "all"],
                       default="all", help="estimator subset for exp1")
        p.add_argument("--kde-order", type=int, default=2, choices=[2, 4],
                       help="kernel order s for the density-unknown runs")
        p.add_argument("--kde-ch", type=float, default=1.0,
                       help="bandwidth constant c_h")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    densities = BUILTIN_IDS if args.density == "all" else (args.density,)
    estimators = ("naive", "paired") if args.estimator == "all" else (args.estimator,)
    try:
        cfg = ExperimentConfig(
            experiment_id=args.command,
            densities=densities,
            n_seeds=args.seeds,
            scale=args.scale,
            out_dir=args.out,
            seed_base=args.seed_base,
            eta_grid=args.eta_grid,
            eps_grid=args.eps_grid,
            estimators=estimators,
            kde_order=args.kde_order,
            kde_ch=args.kde_ch,
        )
        result = _RUNNERS[args.command](cfg)
    except LogGrowthError as exc:
        print(f"loggrowth {args.command}: {exc}", file=sys.stderr)
        return 1
    for name, path in result["paths"].items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
