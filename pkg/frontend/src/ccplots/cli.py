"""plot_threshold <results.csv> <out.png> [--threshold X]"""

from __future__ import annotations

import argparse
import sys

from .render import PlotDataError, PlotSpec, render_threshold_plot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot_threshold",
        description="Render a threshold-sweep CSV as a log-scale figure")
    parser.add_argument("csv", help="results CSV from the simulation side")
    parser.add_argument("out", help="output PNG path (an SVG twin is written too)")
    parser.add_argument("--threshold", type=float, default=None,
                        help="marker position (pp error rate); estimated when absent")
    parser.add_argument("--xmin", type=float, default=None)
    parser.add_argument("--xmax", type=float, default=None)
    parser.add_argument("--ymin", type=float, default=None)
    parser.add_argument("--ymax", type=float, default=None)
    args = parser.parse_args(argv)

    x_range = (args.xmin, args.xmax) if args.xmin is not None and args.xmax is not None else None
    y_range = (args.ymin, args.ymax) if args.ymin is not None and args.ymax is not None else None
    spec = PlotSpec(csv_path=args.csv, out_path=args.out,
                    threshold=args.threshold, x_range=x_range, y_range=y_range)
    try:
        written = render_threshold_plot(spec)
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
