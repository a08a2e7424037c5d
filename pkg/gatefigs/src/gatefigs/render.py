"""Figure rendering from result CSVs.

This package draws the standard figures (fidelity heatmaps over the
amplitude-error plane, fidelity-vs-temperature lines, population traces)
from the CSV files the simulator's CLI emits.  It deliberately knows
nothing about the physics: it parses tables, checks their shape and
renders them.  Rendering is deterministic, so regenerating a figure from
the same CSV with the same library versions reproduces it byte for byte.
"""

import csv
import warnings
from pathlib import Path

from matplotlib.figure import Figure

__all__ = [
    "GridError",
    "MissingColumnError",
    "read_table",
    "render_heatmap",
    "render_lines",
]


class MissingColumnError(KeyError):
    """A requested column is not present in the CSV header."""

    def __init__(self, path, column):
        super().__init__(column)
        self.column = column
        self.path = str(path)

    def __str__(self):
        return f"{self.path}: missing column {self.column!r}"


class GridError(ValueError):
    """Heatmap input does not form a complete rectangular grid."""


def read_table(path) -> tuple[list[str], list[dict]]:
    """Parse a CSV into its header and a list of per-row dicts of strings."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise GridError(f"{path}: empty CSV")
        return list(reader.fieldnames), list(reader)


def _column(path, header, rows, name) -> list[float]:
    if name not in header:
        raise MissingColumnError(path, name)
    return [float(r[name]) for r in rows]


def _save(fig: Figure, out_path) -> str:
    # strip the library version stamp so identical inputs give identical bytes
    fig.savefig(out_path, format="png", dpi=150, metadata={"Software": None})
    return str(out_path)


# ---------------------------------------------------------------------------
# heatmaps


def z_range(z_values) -> tuple[float, float]:
    """Color range for fidelity-like data: from the data floor up to 1."""
    lo = min(z_values)
    return lo, max(1.0, lo)


def build_heatmap_figure(csv_path, x_col, y_col, z_col) -> Figure:
    """Assemble the heatmap figure without writing it.

    The rows must cover a complete rectangular grid in (x_col, y_col);
    row order is free.
    """
    header, rows = read_table(csv_path)
    xs = _column(csv_path, header, rows, x_col)
    ys = _column(csv_path, header, rows, y_col)
    zs = _column(csv_path, header, rows, z_col)

    x_axis = sorted(set(xs))
    y_axis = sorted(set(ys))
    if len(rows) != len(x_axis) * len(y_axis):
        raise GridError(
            f"{csv_path}: {len(rows)} rows cannot fill a "
            f"{len(x_axis)} x {len(y_axis)} grid in ({x_col}, {y_col})"
        )
    if len(rows) == 1:
        warnings.warn(f"{csv_path}: single row gives a degenerate 1 x 1 heatmap")

    x_index = {v: i for i, v in enumerate(x_axis)}
    y_index = {v: i for i, v in enumerate(y_axis)}
    grid = [[None] * len(x_axis) for _ in y_axis]
    for x, y, z in zip(xs, ys, zs):
        i, j = y_index[y], x_index[x]
        if grid[i][j] is not None:
            raise GridError(f"{csv_path}: duplicate grid point ({x:g}, {y:g})")
        grid[i][j] = z

    fig = Figure(figsize=(5.4, 4.4))
    ax = fig.add_subplot()
    vmin, vmax = z_range(zs)
    half_x = (x_axis[-1] - x_axis[0]) / max(1, 2 * (len(x_axis) - 1)) or 0.5
    half_y = (y_axis[-1] - y_axis[0]) / max(1, 2 * (len(y_axis) - 1)) or 0.5
    image = ax.imshow(
        grid,
        origin="lower",
        aspect="auto",
        vmin=vmin,
        vmax=vmax,
        extent=(x_axis[0] - half_x, x_axis[-1] + half_x,
                y_axis[0] - half_y, y_axis[-1] + half_y),
        cmap="viridis",
    )
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    fig.colorbar(image, ax=ax, label=z_col)
    fig.tight_layout()
    return fig


def render_heatmap(csv_path, x_col, y_col, z_col, out_png) -> str:
    """Render a rectangular-grid CSV as a heatmap and write a PNG."""
    return _save(build_heatmap_figure(csv_path, x_col, y_col, z_col), out_png)


# ---------------------------------------------------------------------------
# line plots


def build_lines_figure(csv_path, x_col, series_cols, group_col=None) -> Figure:
    """Assemble a line figure without writing it.

    Plain mode draws one line per entry of series_cols, labeled by column
    name.  With group_col, series_cols must name exactly one value column
    and the rows split into one line per distinct group value, which is
    how long-format scan CSVs (one row per configuration) are drawn.
    """
    series_cols = list(series_cols)
    if not series_cols:
        raise ValueError("no series columns given")
    header, rows = read_table(csv_path)
    x = _column(csv_path, header, rows, x_col)

    fig = Figure(figsize=(5.4, 4.0))
    ax = fig.add_subplot()
    if group_col is None:
        for name in series_cols:
            y = _column(csv_path, header, rows, name)
            pts = sorted(zip(x, y))
            ax.plot([p[0] for p in pts], [p[1] for p in pts], label=name)
        ax.set_ylabel(series_cols[0] if len(series_cols) == 1 else "value")
    else:
        if len(series_cols) != 1:
            raise ValueError("grouped mode draws exactly one value column")
        if group_col not in header:
            raise MissingColumnError(csv_path, group_col)
        y = _column(csv_path, header, rows, series_cols[0])
        groups = sorted({r[group_col] for r in rows})
        for value in groups:
            pts = sorted(
                (xi, yi) for xi, yi, r in zip(x, y, rows) if r[group_col] == value
            )
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", label=f"{group_col}={value}")
        ax.set_ylabel(series_cols[0])
    ax.set_xlabel(x_col)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def render_lines(csv_path, x_col, series_cols, out_png, group_col=None) -> str:
    """Render columns of a CSV as labeled lines and write a PNG."""
    return _save(build_lines_figure(csv_path, x_col, series_cols, group_col), out_png)
