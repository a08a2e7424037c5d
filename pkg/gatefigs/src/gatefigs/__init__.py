"""Figure rendering for gate-simulation result CSVs."""

from . import cli
from .render import (
    GridError,
    MissingColumnError,
    read_table,
    render_heatmap,
    render_lines,
)

__version__ = "0.1.0"

__all__ = [
    "GridError",
    "MissingColumnError",
    "cli",
    "read_table",
    "render_heatmap",
    "render_lines",
]
