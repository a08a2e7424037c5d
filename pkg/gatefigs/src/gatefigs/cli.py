"""Command line entry point: `plot heatmap|lines --csv FILE --out FILE`.

Column flags are optional for the two standard CSV kinds.  A sweep table
defaults to an (xi, epsilon) fidelity heatmap; a line plot defaults to
the population columns over time when present, and otherwise to fidelity
against temperature split by the spin-echo flag.
"""

import argparse
import sys

from .render import GridError, MissingColumnError, read_table, render_heatmap, render_lines

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    heat = sub.add_parser("heatmap", help="rectangular-grid CSV to a colored map")
    heat.add_argument("--csv", required=True, help="input table")
    heat.add_argument("--out", required=True, help="output PNG path")
    heat.add_argument("--x", default="xi", help="grid column for the x axis")
    heat.add_argument("--y", default="epsilon", help="grid column for the y axis")
    heat.add_argument("--z", default="avg_fidelity", help="value column for the color scale")

    lines = sub.add_parser("lines", help="CSV columns as labeled lines")
    lines.add_argument("--csv", required=True, help="input table")
    lines.add_argument("--out", required=True, help="output PNG path")
    lines.add_argument("--x", default=None, help="x-axis column")
    lines.add_argument("--y", default=None,
                       help="comma-separated value columns (default: inferred)")
    lines.add_argument("--series", default=None,
                       help="split rows into one line per value of this column")
    return parser


def _infer_lines(header, args) -> tuple[str, list[str], str | None]:
    x_col = args.x
    series = args.y.split(",") if args.y else None
    group = args.series
    if x_col is None:
        if "time_us" in header:
            x_col = "time_us"
        elif "temperature_uK" in header:
            x_col = "temperature_uK"
        else:
            raise ValueError("cannot infer an x column; pass --x")
    if series is None:
        populations = [name for name in header if name.startswith("pop_")]
        if populations and x_col == "time_us":
            series = populations
        elif "avg_fidelity" in header:
            series = ["avg_fidelity"]
            if group is None and "spin_echo" in header:
                group = "spin_echo"
        else:
            raise ValueError("cannot infer value columns; pass --y")
    return x_col, series, group


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "heatmap":
            render_heatmap(args.csv, args.x, args.y, args.z, args.out)
        else:
            header, _ = read_table(args.csv)
            x_col, series, group = _infer_lines(header, args)
            render_lines(args.csv, x_col, series, args.out, group_col=group)
    except (MissingColumnError, GridError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
