"""Run configuration: JSON file loading, flag overrides and angle parsing."""

from __future__ import annotations

import json
import logging
import math
import re
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, ValidationError

from .core import FIGURE_BASE, RouterParams, validate
from .oracle import LatticeConfig
from .sweep import SweepGrid, load_grid

__all__ = [
    "ConfigError",
    "RunConfig",
    "apply_param_overrides",
    "load_run_config",
    "parse_angle",
]

logger = logging.getLogger(__name__)

_TOP_LEVEL_KEYS = ("params", "oracle", "grid")
_ANGLE = re.compile(
    r"^(?P<sign>[+-])?(?P<factor>\d+(?:\.\d*)?)?\*?pi(?:/(?P<divisor>\d+(?:\.\d*)?))?$"
)


class ConfigError(ValueError):
    """Raised when a configuration file or override cannot be used."""


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    params: RouterParams = FIGURE_BASE
    oracle: LatticeConfig | None = None
    grid: SweepGrid | None = None


def parse_angle(text: str | float) -> float:
    """Radians, or an exact multiple of π such as ``pi/4``, ``3pi/4`` or ``-pi/2``."""

    if isinstance(text, (int, float)):
        return float(text)
    compact = "".join(str(text).split()).lower().replace("π", "pi")
    match = _ANGLE.match(compact)
    if match:
        value = math.pi * float(match["factor"] or 1.0)
        if match["divisor"]:
            divisor = float(match["divisor"])
            if divisor == 0.0:
                raise ConfigError(f"invalid angle {text!r}: division by zero")
            value /= divisor
        return -value if match["sign"] == "-" else value
    try:
        value = float(compact)
    except ValueError as exc:
        raise ConfigError(f"invalid angle {text!r}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"invalid angle {text!r}")
    return value


def apply_param_overrides(params: Mapping[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Merge ``NAME=VALUE`` strings over a parameter mapping."""

    merged = dict(params)
    for item in overrides:
        name, sep, raw = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise ConfigError(f"invalid --param {item!r}: expected NAME=VALUE")
        if name == "n_junction":
            try:
                merged[name] = int(raw)
            except ValueError as exc:
                raise ConfigError(f"invalid --param {item!r}: n_junction must be an integer") from exc
        else:
            merged[name] = parse_angle(raw)
        logger.debug("Parameter override %s=%s", name, merged[name])
    return merged


def _read_document(path: Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    for key in document:
        if key not in _TOP_LEVEL_KEYS:
            raise ConfigError(f"{key}: unknown field")
    return document


def load_run_config(path: Path | None = None, overrides: Sequence[str] = ()) -> RunConfig:
    """Load a RunConfig; overrides win over file values, the file over defaults.

    A grid without its own ``base`` inherits the merged ``params``.
    """

    document = _read_document(path) if path is not None else {}
    raw_params = document.get("params", FIGURE_BASE.model_dump())
    if not isinstance(raw_params, Mapping):
        raise ConfigError("params: must be a JSON object")
    params = validate(apply_param_overrides(raw_params, overrides))

    oracle = None
    if document.get("oracle") is not None:
        try:
            oracle = LatticeConfig.model_validate(document["oracle"])
        except ValidationError as exc:
            first = exc.errors()[0]
            where = ".".join(str(part) for part in first.get("loc", ()))
            raise ConfigError(f"oracle.{where}: {first.get('msg')}") from exc

    grid = None
    if document.get("grid") is not None:
        raw_grid = document["grid"]
        if not isinstance(raw_grid, Mapping):
            raise ConfigError("grid: must be a JSON object")
        raw_grid = dict(raw_grid)
        raw_grid.setdefault("base", params)
        grid = load_grid(raw_grid)

    logger.info("Loaded configuration from %s", path or "built-in defaults")
    return RunConfig(params=params, oracle=oracle, grid=grid)
