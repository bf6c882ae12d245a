"""Tests for the table, JSON and plot-script writers."""

from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from tbulge.export import (
    PlotPanel,
    dumps,
    format_float,
    json_default,
    write_panel_csv,
    write_plot_script,
    write_table_csv,
    write_table_json,
)
from tbulge.oracle import OracleMode
from tbulge.sweep import SweepAxis, SweepGrid, run_sweep


@pytest.fixture
def small_table():
    grid = SweepGrid(
        axes=(
            SweepAxis(name="g_a", min=0.5, max=2.0, count=3),
            SweepAxis(name="g_b", min=1.0, max=3.0, count=2),
        )
    )
    return run_sweep(grid)


@pytest.mark.parametrize("value", [0.1, 1.0 / 3.0, math.pi, 1e-300, -2.5e17])
def test_format_float_parses_back_exactly(value) -> None:
    assert float(format_float(value)) == value


def test_format_float_writes_nan_literally() -> None:
    assert format_float(float("nan")) == "nan"
    assert format_float(np.float64(0.25)) == "0.25"


def test_json_default_handles_numeric_and_enum_values() -> None:
    assert json_default(np.arange(3)) == [0, 1, 2]
    assert json_default(np.float64(1.5)) == 1.5
    assert json_default(complex(1.0, -2.0)) == [1.0, -2.0]
    assert json_default(OracleMode.WAVEPACKET) == "packet"


def test_dumps_replaces_non_finite_numbers_with_null() -> None:
    payload = json.loads(dumps({"value": float("nan"), "nested": [1.0, float("inf")]}))

    assert payload == {"value": None, "nested": [1.0, None]}


def test_table_csv_has_header_and_grid_order(tmp_path, small_table) -> None:
    path = write_table_csv(small_table, tmp_path / "table.csv")

    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    assert tuple(rows[0]) == small_table.header
    assert len(rows) == 1 + 6
    assert [float(row[0]) for row in rows[1:]] == [0.5, 0.5, 1.25, 1.25, 2.0, 2.0]
    assert {row[-1] for row in rows[1:]} == {"ok"}


def test_table_json_carries_provenance(tmp_path, small_table) -> None:
    path = write_table_json(small_table, tmp_path / "table.json", {"figure": "test"})

    payload = json.loads(path.read_text())
    metadata = payload["metadata"]
    assert metadata["rows"] == 6
    assert metadata["skipped"] == 0
    assert metadata["figure"] == "test"
    assert metadata["k_a"] == pytest.approx(math.pi / 4.0)
    assert metadata["base_params"]["n_junction"] == small_table.grid.base.n_junction
    assert "version" in metadata
    first = payload["records"][0]
    assert first["T_a"] + first["R_a"] + first["T_ba"] == pytest.approx(1.0, abs=1e-12)


def test_panel_csv_keeps_canonical_axis_order(tmp_path, small_table) -> None:
    path = write_panel_csv(small_table, "T_ba", ("g_a", "g_b"), tmp_path / "panel.csv")

    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["g_a", "g_b", "T_ba", "status"]
    assert float(rows[1][2]) == small_table.column("T_ba")[0]


def test_plot_script_lists_panels_with_their_own_axis_order(tmp_path) -> None:
    panels = (
        PlotPanel("figure2a.csv", "T_a", "g_a", "g_b", "g_c", "T^a"),
        PlotPanel("figure2c.csv", "T_ba", "g_b", "g_a", "g_c", "T_b^a"),
    )

    path = write_plot_script(panels, tmp_path / "plot_figure2.py", "the demo sweep")

    text = path.read_text()
    assert "import matplotlib.pyplot as plt" in text
    assert "the demo sweep" in text
    assert "('figure2c.csv', 'T_ba', 'g_b', 'g_a', 'g_c', 'T_b^a')" in text
    assert 'projection="3d"' in text
    compile(text, str(path), "exec")
