"""Command line entry point: plotviz plot --in DIR --env NAME --out FILE."""

import argparse
import logging
import sys

from .aggregate import SchemaError, baseline_reward, build_series, load_directory
from .render import Y_LIMITS, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotviz",
        description="Render learning curves with 95% bands from run CSVs.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    plot = sub.add_parser("plot", help="aggregate a CSV directory into one figure")
    plot.add_argument(
        "--in",
        dest="in_dir",
        required=True,
        help="directory of run CSVs (searched recursively)",
    )
    plot.add_argument(
        "--env",
        required=True,
        choices=sorted(Y_LIMITS),
        help="environment whose runs to plot",
    )
    plot.add_argument("--out", required=True, help="image file to write")
    plot.add_argument(
        "--x",
        dest="x_axis",
        choices=("evals", "wallclock"),
        default="evals",
        help="x axis: evaluation index (default) or wall-clock seconds",
    )
    return parser


def cmd_plot(args) -> int:
    runs = load_directory(args.in_dir, args.env)
    series = build_series(runs, args.x_axis)
    if not series:
        raise FileNotFoundError(
            f"no optimizer runs for env {args.env!r} under {args.in_dir}"
        )
    out = render(
        series,
        args.env,
        args.out,
        x_axis=args.x_axis,
        baseline=baseline_reward(runs),
    )
    print(f"wrote {out} ({len(series)} algorithms)")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return cmd_plot(args)
    except (OSError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
