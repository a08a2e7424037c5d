"""Rendering contract: grid checks, column errors, determinism, CLI exits."""

import csv

import pytest

from gatefigs.cli import EXIT_INPUT, EXIT_IO, EXIT_OK, main
from gatefigs.render import (
    GridError,
    MissingColumnError,
    build_heatmap_figure,
    build_lines_figure,
    read_table,
    render_heatmap,
    render_lines,
    z_range,
)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return str(path)


@pytest.fixture
def grid_csv(tmp_path):
    rows = [
        (x / 10.0, y / 10.0, 1.0 - 0.1 * x - 0.03 * y)
        for x in range(4)
        for y in range(3)
    ]
    return write_csv(tmp_path / "grid.csv", ["xi", "epsilon", "avg_fidelity"], rows)


@pytest.fixture
def scan_csv(tmp_path):
    rows = []
    for echo, drop in (("true", 0.002), ("false", 0.006)):
        for temp in (10.0, 20.0, 30.0):
            rows.append((temp, echo, 0.99 - drop * temp))
    return write_csv(
        tmp_path / "scan.csv", ["temperature_uK", "spin_echo", "avg_fidelity"], rows
    )


def test_read_table_header_and_rows(grid_csv):
    header, rows = read_table(grid_csv)
    assert header == ["xi", "epsilon", "avg_fidelity"]
    assert len(rows) == 12
    assert rows[0]["xi"] == "0.0"


def test_read_table_rejects_empty_file(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.touch()
    with pytest.raises(GridError, match="empty"):
        read_table(empty)


def test_heatmap_grid_shape(grid_csv):
    fig = build_heatmap_figure(grid_csv, "xi", "epsilon", "avg_fidelity")
    image = fig.axes[0].images[0]
    assert image.get_array().shape == (3, 4)  # rows are the y axis
    assert fig.axes[0].get_xlabel() == "xi"
    assert fig.axes[0].get_ylabel() == "epsilon"


def test_heatmap_color_range_clamps_to_one(grid_csv):
    fig = build_heatmap_figure(grid_csv, "xi", "epsilon", "avg_fidelity")
    assert fig.axes[0].images[0].get_clim() == (pytest.approx(0.64), 1.0)
    assert z_range([0.9, 0.95]) == (0.9, 1.0)


def test_heatmap_single_row_warns(tmp_path):
    path = write_csv(tmp_path / "one.csv", ["xi", "epsilon", "avg_fidelity"], [(0, 0, 0.99)])
    with pytest.warns(UserWarning, match="1 x 1"):
        fig = build_heatmap_figure(path, "xi", "epsilon", "avg_fidelity")
    assert fig.axes[0].images[0].get_array().shape == (1, 1)


def test_heatmap_rejects_incomplete_grid(tmp_path):
    path = write_csv(
        tmp_path / "holes.csv",
        ["xi", "epsilon", "avg_fidelity"],
        [(0, 0, 0.99), (0, 1, 0.98), (1, 0, 0.97)],
    )
    with pytest.raises(GridError, match="cannot fill"):
        build_heatmap_figure(path, "xi", "epsilon", "avg_fidelity")


def test_heatmap_rejects_duplicate_points(tmp_path):
    path = write_csv(
        tmp_path / "dupes.csv",
        ["xi", "epsilon", "avg_fidelity"],
        [(0, 0, 0.99), (0, 0, 0.98), (1, 0, 0.97), (1, 1, 0.96)],
    )
    with pytest.raises(GridError, match="duplicate"):
        build_heatmap_figure(path, "xi", "epsilon", "avg_fidelity")


def test_missing_column_names_the_column(grid_csv):
    with pytest.raises(MissingColumnError, match="fidelity_typo"):
        build_heatmap_figure(grid_csv, "xi", "epsilon", "fidelity_typo")


def test_lines_wide_mode_legend_from_columns(tmp_path):
    rows = [(t, 1.0 - 0.01 * t, 0.01 * t, 0.5) for t in range(6)]
    path = write_csv(tmp_path / "pops.csv", ["time_us", "pop_00", "pop_rr", "trace"], rows)
    fig = build_lines_figure(path, "time_us", ["pop_00", "pop_rr"])
    ax = fig.axes[0]
    assert [line.get_label() for line in ax.lines] == ["pop_00", "pop_rr"]
    assert [t.get_text() for t in ax.get_legend().get_texts()] == ["pop_00", "pop_rr"]


def test_lines_grouped_mode_splits_rows(scan_csv):
    fig = build_lines_figure(scan_csv, "temperature_uK", ["avg_fidelity"], group_col="spin_echo")
    ax = fig.axes[0]
    labels = [line.get_label() for line in ax.lines]
    assert labels == ["spin_echo=false", "spin_echo=true"]
    # echo above no-echo at every temperature in this table
    free, echo = ax.lines
    assert all(e > f for e, f in zip(echo.get_ydata(), free.get_ydata()))


def test_lines_rejects_empty_series(scan_csv):
    with pytest.raises(ValueError, match="no series columns"):
        build_lines_figure(scan_csv, "temperature_uK", [])


def test_lines_grouped_mode_wants_one_column(scan_csv):
    with pytest.raises(ValueError, match="exactly one value column"):
        build_lines_figure(
            scan_csv, "temperature_uK", ["avg_fidelity", "xi"], group_col="spin_echo"
        )


def test_rendering_is_byte_stable(grid_csv, tmp_path):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    render_heatmap(grid_csv, "xi", "epsilon", "avg_fidelity", a)
    render_heatmap(grid_csv, "xi", "epsilon", "avg_fidelity", b)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_cli_heatmap_defaults(grid_csv, tmp_path):
    out = tmp_path / "heat.png"
    assert main(["heatmap", "--csv", grid_csv, "--out", str(out)]) == EXIT_OK
    assert out.stat().st_size > 0


def test_cli_lines_infers_temperature_scan(scan_csv, tmp_path, capsys):
    out = tmp_path / "scan.png"
    assert main(["lines", "--csv", scan_csv, "--out", str(out)]) == EXIT_OK
    assert out.stat().st_size > 0


def test_cli_lines_infers_population_trace(tmp_path):
    rows = [(t, 1.0 - 0.01 * t, 0.01 * t, 1.0) for t in range(6)]
    path = write_csv(tmp_path / "pops.csv", ["time_us", "pop_00", "pop_rr", "trace"], rows)
    out = tmp_path / "pops.png"
    assert main(["lines", "--csv", path, "--out", str(out)]) == EXIT_OK
    assert out.stat().st_size > 0


def test_cli_missing_column_exits_with_name(grid_csv, tmp_path, capsys):
    out = tmp_path / "heat.png"
    code = main(["heatmap", "--csv", grid_csv, "--out", str(out), "--z", "nope"])
    assert code == EXIT_INPUT
    assert "nope" in capsys.readouterr().err


def test_cli_missing_file_is_io_error(tmp_path, capsys):
    code = main(["heatmap", "--csv", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "o.png")])
    assert code == EXIT_IO
    assert "I/O error" in capsys.readouterr().err


def test_cli_unexplainable_lines_input_exits(tmp_path, capsys):
    path = write_csv(tmp_path / "odd.csv", ["a", "b"], [(1, 2)])
    code = main(["lines", "--csv", path, "--out", str(tmp_path / "o.png")])
    assert code == EXIT_INPUT
    assert "cannot infer" in capsys.readouterr().err
