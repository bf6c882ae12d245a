"""Batch evaluation of scattering coefficients over parameter grids."""

from __future__ import annotations

import logging
import math
import os
from collections.abc import Iterator, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core import FIGURE_BASE, RouterParams
from .scattering import COEFFICIENT_COLUMNS, Port, evaluate_columns

__all__ = [
    "AXIS_NAMES",
    "CONSERVATION_TOL",
    "DEFAULT_COUPLING_RANGE",
    "Extremum",
    "ExtremumGroup",
    "ExtremumReport",
    "MaxTransferReport",
    "SKIPPED_EVANESCENT",
    "SweepAxis",
    "SweepError",
    "SweepGrid",
    "SweepTable",
    "find_extrema",
    "load_grid",
    "max_transfer",
    "run_sweep",
]

logger = logging.getLogger(__name__)

AxisName = Literal["g_a", "g_b", "g_c", "k_a", "n_junction"]
AXIS_NAMES: tuple[str, ...] = ("g_a", "g_b", "g_c", "k_a", "n_junction")
DEFAULT_COUPLING_RANGE = (0.2, 8.0)
CONSERVATION_TOL = 1e-12
SKIPPED_EVANESCENT = "skipped: evanescent"
_COUPLING_AXES = frozenset({"g_a", "g_b", "g_c"})
_CHUNK_SIZE = 4096


class SweepError(RuntimeError):
    """Raised for invalid grids and for rows that fail conservation."""


class SweepAxis(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: AxisName
    min: float
    max: float
    count: int = Field(ge=2)

    @model_validator(mode="after")
    def _check_range(self) -> "SweepAxis":
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValueError("axis bounds must be finite")
        if self.max < self.min:
            raise ValueError("axis max must not be below min")
        if self.name in _COUPLING_AXES and self.min < 0.0:
            raise ValueError("coupling axis must be non-negative")
        if self.name == "k_a" and not (0.0 < self.min and self.max < math.pi):
            raise ValueError("k_a axis must lie inside (0, π)")
        if self.name == "n_junction":
            values = np.linspace(self.min, self.max, self.count)
            if self.min < 1.0 or np.any(np.abs(values - np.rint(values)) > 1e-9):
                raise ValueError("n_junction axis needs integer steps ≥ 1")
        return self

    @property
    def step(self) -> float:
        return (self.max - self.min) / (self.count - 1)

    def values(self) -> np.ndarray:
        values = np.linspace(self.min, self.max, self.count)
        if self.name == "n_junction":
            return np.rint(values)
        return values


class SweepGrid(BaseModel):
    """Base parameters plus up to four swept axes.

    ``k_a`` is the CRW-a wavenumber used for every point unless ``k_a`` is
    itself an axis.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    base: RouterParams = FIGURE_BASE
    k_a: float = math.pi / 4.0
    axes: tuple[SweepAxis, ...] = Field(min_length=1, max_length=4)
    port: Literal["a", "b", "both"] = "a"

    @field_validator("k_a")
    @classmethod
    def _wavenumber(cls, value: float) -> float:
        if not 0.0 < value < math.pi:
            raise ValueError("wavenumber must lie in (0, π)")
        return value

    @model_validator(mode="after")
    def _distinct_axes(self) -> "SweepGrid":
        names = [axis.name for axis in self.axes]
        if len(set(names)) != len(names):
            raise ValueError("axis names must be distinct")
        return self

    @property
    def ports(self) -> tuple[Port, ...]:
        if self.port == "both":
            return (Port.FROM_A, Port.FROM_B)
        return (Port(self.port),)

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(axis.name for axis in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(axis.count for axis in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def points(self) -> dict[str, np.ndarray]:
        """Axis values for every grid point in lexicographic order (last axis fastest)."""

        mesh = np.meshgrid(*(axis.values() for axis in self.axes), indexing="ij")
        return {axis.name: values.ravel() for axis, values in zip(self.axes, mesh)}

    def metadata(self) -> dict[str, Any]:
        return {
            "grid": self.model_dump(mode="json"),
            "default_coupling_range": list(DEFAULT_COUPLING_RANGE),
            "range_note": "coupling ranges default to [0.2, 8] in units of the reference hopping",
        }


def load_grid(data: SweepGrid | Mapping[str, Any]) -> SweepGrid:
    """Validate a grid description, raising :class:`SweepError`."""

    if isinstance(data, SweepGrid):
        return data
    try:
        return SweepGrid.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(["grid", *(str(part) for part in first.get("loc", ()))])
        message = str(first.get("msg", "invalid grid")).removeprefix("Value error, ")
        raise SweepError(f"{where}: {message}") from exc


def _coefficient_names(ports: Sequence[Port]) -> tuple[str, ...]:
    return tuple(name for port in ports for name in COEFFICIENT_COLUMNS[port])


@dataclass(frozen=True)
class SweepTable:
    """One row per grid point: axis values, coefficients, residual and status."""

    grid: SweepGrid
    axis_names: tuple[str, ...]
    coefficient_names: tuple[str, ...]
    columns: dict[str, np.ndarray]
    status: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.status.shape[0])

    @property
    def header(self) -> tuple[str, ...]:
        return (*self.axis_names, *self.coefficient_names, "residual", "status")

    @property
    def propagating(self) -> np.ndarray:
        return self.status == "ok"

    @property
    def skipped(self) -> int:
        return int(np.count_nonzero(~self.propagating))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError as exc:
            raise SweepError(f"table has no column {name!r}") from exc

    def rows(self) -> Iterator[tuple[Any, ...]]:
        numeric = [self.columns[name] for name in self.header[:-1]]
        for index in range(len(self)):
            yield (*(column[index] for column in numeric), self.status[index])

    def assert_conserved(self, tolerance: float = CONSERVATION_TOL) -> None:
        residual = self.columns["residual"][self.propagating]
        if residual.size and not np.all(residual < tolerance):
            worst = int(np.argmax(np.where(self.propagating, self.columns["residual"], -np.inf)))
            raise SweepError(
                f"row {worst} violates conservation: residual "
                f"{self.columns['residual'][worst]:.3e} ≥ {tolerance:.0e}"
            )


def _point_columns(grid: SweepGrid, points: Mapping[str, np.ndarray]) -> dict[str, Any]:
    columns: dict[str, Any] = grid.base.model_dump()
    columns["k_a"] = grid.k_a
    columns.update(points)
    return columns


def _resolve_threads(threads: int) -> int:
    if threads < 0:
        raise SweepError("threads must be ≥ 0")
    return threads or os.cpu_count() or 1


def run_sweep(grid: SweepGrid, threads: int = 1, *, chunk_size: int = _CHUNK_SIZE) -> SweepTable:
    """Evaluate every grid point; rows come back in grid order for any thread count."""

    grid = load_grid(grid)
    workers = _resolve_threads(threads)
    points = grid.points()
    size = grid.size
    columns_in = _point_columns(grid, points)
    full_columns = {
        name: np.broadcast_to(np.asarray(value, dtype=float), (size,))
        for name, value in columns_in.items()
    }
    ports = grid.ports
    coefficient_names = _coefficient_names(ports)
    out: dict[str, np.ndarray] = {name: points[name].astype(float) for name in grid.axis_names}
    for name in (*coefficient_names, "residual"):
        out[name] = np.full(size, np.nan)
    propagating = np.zeros(size, dtype=bool)
    bounds = [(start, min(start + chunk_size, size)) for start in range(0, size, chunk_size)]
    logger.info(
        "Sweeping %s points over %s (%s) with %s worker(s)",
        size,
        ",".join(grid.axis_names),
        grid.port,
        workers,
    )

    def evaluate(span: tuple[int, int]) -> tuple[int, int, list[dict[str, np.ndarray]]]:
        start, stop = span
        chunk = {name: values[start:stop] for name, values in full_columns.items()}
        return start, stop, [evaluate_columns(chunk, port) for port in ports]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start, stop, results in pool.map(evaluate, bounds):
            residual = np.zeros(stop - start)
            for port, result in zip(ports, results):
                for name in COEFFICIENT_COLUMNS[port]:
                    out[name][start:stop] = result[name]
                residual = np.maximum(residual, result["residual"])
            propagating[start:stop] = results[0]["propagating"]
            out["residual"][start:stop] = np.where(results[0]["propagating"], residual, np.nan)

    status = np.where(propagating, "ok", SKIPPED_EVANESCENT).astype(object)
    table = SweepTable(
        grid=grid,
        axis_names=grid.axis_names,
        coefficient_names=coefficient_names,
        columns=out,
        status=status,
        metadata=grid.metadata(),
    )
    if table.skipped:
        logger.info("%s of %s points skipped: evanescent channel", table.skipped, size)
    logger.info("Sweep finished: %s rows", size)
    return table


@dataclass(frozen=True)
class Extremum:
    """Interior extremum of one scan line; ``grid_index`` is its centre sample along the scan axis."""

    kind: Literal["max", "min"]
    location: float
    value: float
    grid_index: int
    bracket: tuple[float, float]


@dataclass(frozen=True)
class ExtremumGroup:
    context: dict[str, float]
    extrema: tuple[Extremum, ...]

    @property
    def note(self) -> str | None:
        return None if self.extrema else "no interior extremum"


@dataclass(frozen=True)
class ExtremumReport:
    coefficient: str
    scan_axis: str
    kind: str
    groups: tuple[ExtremumGroup, ...]
    metadata: dict[str, Any] = field(default_factory=dict)

    def by_junction(self) -> dict[int, list[Extremum]]:
        """Extrema keyed by N, so a shift of location with N reads off directly."""

        result: dict[int, list[Extremum]] = {}
        for group in self.groups:
            result.setdefault(int(group.context["n_junction"]), []).extend(group.extrema)
        return result

    def to_dict(self) -> dict[str, Any]:
        return {
            "coefficient": self.coefficient,
            "scan_axis": self.scan_axis,
            "kind": self.kind,
            "groups": [
                {
                    "context": group.context,
                    "extrema": [
                        {
                            "kind": extremum.kind,
                            "location": extremum.location,
                            "value": extremum.value,
                            "grid_index": extremum.grid_index,
                            "bracket": list(extremum.bracket),
                        }
                        for extremum in group.extrema
                    ],
                    "note": group.note,
                }
                for group in self.groups
            ],
            "metadata": self.metadata,
        }


def _vertex(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Vertex of the parabola through three points."""

    (x0, x1, x2), (y0, y1, y2) = x, y
    numerator = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    denominator = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    if denominator == 0.0:
        return float(x1), float(y1)
    location = x1 - 0.5 * numerator / denominator
    # Lagrange form evaluated at the vertex
    value = (
        y0 * (location - x1) * (location - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (location - x0) * (location - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (location - x0) * (location - x1) / ((x2 - x0) * (x2 - x1))
    )
    return float(location), float(value)


def _interior_extrema(
    x: np.ndarray, y: np.ndarray, kind: str
) -> list[Extremum]:
    found: list[Extremum] = []
    for index in range(1, x.size - 1):
        y0, y1, y2 = y[index - 1 : index + 2]
        if not np.all(np.isfinite((y0, y1, y2))):
            continue
        for label, hit in (("max", y0 < y1 >= y2), ("min", y0 > y1 <= y2)):
            if kind not in (label, "both") or not hit:
                continue
            location, value = _vertex(x[index - 1 : index + 2], y[index - 1 : index + 2])
            found.append(
                Extremum(label, location, value, index, (float(x[index - 1]), float(x[index + 1])))
            )
    return found


def find_extrema(
    table: SweepTable,
    coefficient: str,
    scan_axis: str,
    *,
    kind: Literal["max", "min", "both"] = "max",
) -> ExtremumReport:
    """Locate interior extrema of a coefficient along one axis.

    Rows are grouped by every other axis value (N included, taken from the
    base parameters when it is not swept).
    """

    if scan_axis not in table.axis_names:
        raise SweepError(f"scan axis {scan_axis!r} is not an axis of the table")
    values = table.column(coefficient)
    scan = table.column(scan_axis)
    context_axes = [name for name in table.axis_names if name != scan_axis]
    base_n = float(table.grid.base.n_junction)

    if context_axes:
        keys = np.column_stack([table.columns[name] for name in context_axes])
        unique_keys = np.unique(keys, axis=0)
    else:
        keys = np.zeros((len(table), 0))
        unique_keys = np.zeros((1, 0))
    groups: list[ExtremumGroup] = []
    for key in unique_keys:
        mask = np.all(keys == key, axis=1)
        order = np.argsort(scan[mask], kind="stable")
        x = scan[mask][order]
        y = values[mask][order]
        context = {name: float(value) for name, value in zip(context_axes, key)}
        context.setdefault("n_junction", base_n)
        extrema = tuple(_interior_extrema(x, y, kind))
        if not extrema:
            logger.info("No interior extremum of %s along %s at %s", coefficient, scan_axis, context)
        groups.append(ExtremumGroup(context, extrema))

    return ExtremumReport(
        coefficient=coefficient,
        scan_axis=scan_axis,
        kind=kind,
        groups=tuple(groups),
        metadata=table.metadata,
    )


@dataclass(frozen=True)
class MaxTransferReport:
    transfer_ba: float
    transfer_ab: float
    argmax_ba: dict[str, float]
    argmax_ab: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "T_ba": self.transfer_ba,
            "T_ab": self.transfer_ab,
            "argmax_T_ba": self.argmax_ba,
            "argmax_T_ab": self.argmax_ab,
        }


def _zoomed(grid: SweepGrid, original: SweepGrid, best: Mapping[str, float]) -> SweepGrid:
    limits = {axis.name: axis for axis in original.axes}
    base = grid.base
    axes: list[SweepAxis] = []
    for axis in grid.axes:
        if axis.name == "n_junction":
            base = base.model_copy(update={"n_junction": int(best["n_junction"])})
            continue
        step = axis.step
        outer = limits[axis.name]
        axes.append(
            SweepAxis(
                name=axis.name,
                min=max(outer.min, best[axis.name] - step),
                max=min(outer.max, best[axis.name] + step),
                count=axis.count,
            )
        )
    return grid.model_copy(update={"base": base, "axes": tuple(axes)})


def _best_transfer(
    grid: SweepGrid, port: Port, threads: int, refinements: int
) -> tuple[float, dict[str, float]]:
    column = "T_ba" if port is Port.FROM_A else "T_ab"
    current = grid.model_copy(update={"port": port.value})
    original = current
    best_value = -math.inf
    best_point: dict[str, float] = {}
    for round_index in range(refinements + 1):
        table = run_sweep(current, threads)
        values = table.columns[column]
        if not np.any(np.isfinite(values)):
            break
        index = int(np.nanargmax(values))
        point = {name: float(table.columns[name][index]) for name in table.axis_names}
        if float(values[index]) > best_value:
            best_value = float(values[index])
            best_point = {**best_point, **point}
        logger.debug("Refinement %s: sup %s = %.12f at %s", round_index, column, best_value, best_point)
        if round_index == refinements:
            break
        current = _zoomed(current, original, best_point)
        if not current.axes:
            break
    if not best_point:
        return 0.0, {}
    best_point.setdefault("n_junction", float(current.base.n_junction))
    return best_value, best_point


def max_transfer(grid: SweepGrid, threads: int = 1, *, refinements: int = 3) -> MaxTransferReport:
    """Suprema of both transfer rates over a grid, zooming around the best point."""

    grid = load_grid(grid)
    transfer_ba, argmax_ba = _best_transfer(grid, Port.FROM_A, threads, refinements)
    transfer_ab, argmax_ab = _best_transfer(grid, Port.FROM_B, threads, refinements)
    return MaxTransferReport(transfer_ba, transfer_ab, argmax_ba, argmax_ab)
