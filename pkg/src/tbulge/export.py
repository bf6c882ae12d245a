"""CSV/JSON writers for sweep tables and reports, and plot-script emission."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from collections.abc import Mapping, Sequence
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

__all__ = [
    "PlotPanel",
    "dumps",
    "format_float",
    "json_default",
    "table_metadata",
    "write_json",
    "write_panel_csv",
    "write_plot_script",
    "write_table_csv",
    "write_table_json",
]

logger = logging.getLogger(__name__)


def format_float(value: Any) -> str:
    """Render a number with 17 significant digits so it parses back exactly."""

    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def json_default(obj: Any) -> Any:
    """Fallback serializer for numpy values, complex numbers and models."""

    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    if hasattr(obj, "model_dump"):
        return obj.model_dump(mode="json")
    if hasattr(obj, "__dict__"):
        return obj.__dict__
    return str(obj)


def _finite_or_none(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite_or_none(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(item) for item in value]
    return value


def dumps(payload: Any) -> str:
    encoded = json.loads(json.dumps(payload, default=json_default))
    return json.dumps(_finite_or_none(encoded), indent=2, allow_nan=False)


def write_json(payload: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload) + "\n", encoding="utf-8")
    logger.info("Wrote %s", path)
    return path


def table_metadata(table: Any, extra: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Provenance block: base parameters, grid, version and range note."""

    from . import __version__

    metadata: dict[str, Any] = {
        "version": __version__,
        "base_params": table.grid.base.model_dump(),
        "k_a": table.grid.k_a,
        "rows": len(table),
        "skipped": table.skipped,
    }
    metadata.update(table.metadata)
    if extra:
        metadata.update(extra)
    return metadata


def write_table_csv(table: Any, path: Path) -> Path:
    """Header row, then one row per grid point in grid order."""

    table.assert_conserved()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(table.header)
        for row in table.rows():
            writer.writerow([*(format_float(value) for value in row[:-1]), row[-1]])
    logger.info("Wrote %s rows to %s", len(table), path)
    return path


def write_table_json(
    table: Any, path: Path, extra_metadata: Mapping[str, Any] | None = None
) -> Path:
    table.assert_conserved()
    header = table.header
    records = [
        {name: (value if name == "status" else float(value)) for name, value in zip(header, row)}
        for row in table.rows()
    ]
    return write_json({"metadata": table_metadata(table, extra_metadata), "records": records}, path)


@dataclasses.dataclass(frozen=True)
class PlotPanel:
    """One colour-mapped 3D scatter view of a dataset file."""

    filename: str
    coefficient: str
    x: str
    y: str
    z: str
    title: str


def write_panel_csv(table: Any, coefficient: str, axes: Sequence[str], path: Path) -> Path:
    """A single-coefficient dataset with the axes in canonical order."""

    table.assert_conserved()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = [table.column(name) for name in (*axes, coefficient)]
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([*axes, coefficient, "status"])
        for index, status in enumerate(table.status):
            writer.writerow([*(format_float(column[index]) for column in columns), status])
    return path


_PLOT_TEMPLATE = '''"""Render {label} from the CSV datasets next to this script.

Requires numpy and matplotlib; run with: python {script}
"""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent
PANELS = {panels}


def main():
    for filename, coefficient, x, y, z, title in PANELS:
        data = np.genfromtxt(HERE / filename, delimiter=",", names=True, dtype=None, encoding="utf-8")
        keep = data["status"] == "ok"
        figure = plt.figure()
        axes = figure.add_subplot(projection="3d")
        points = axes.scatter(
            data[x][keep], data[y][keep], data[z][keep],
            c=data[coefficient][keep], cmap="viridis", vmin=0.0, vmax=1.0, s=4,
        )
        axes.set_xlabel(x)
        axes.set_ylabel(y)
        axes.set_zlabel(z)
        axes.set_title(title)
        figure.colorbar(points, ax=axes, label=coefficient)
        figure.savefig(HERE / (Path(filename).stem + ".png"), dpi=150)
    plt.show()


if __name__ == "__main__":
    main()
'''


def write_plot_script(panels: Sequence[PlotPanel], path: Path, label: str) -> Path:
    """Emit a matplotlib script; axis order per panel is decided here, not in the data."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = ",\n    ".join(
        repr((panel.filename, panel.coefficient, panel.x, panel.y, panel.z, panel.title))
        for panel in panels
    )
    path.write_text(
        _PLOT_TEMPLATE.format(label=label, script=path.name, panels="[\n    " + rows + ",\n]"),
        encoding="utf-8",
    )
    logger.info("Wrote plot script %s", path)
    return path
