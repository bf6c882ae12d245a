"""Parameter model, dispersion kinematics and effective junction couplings."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

__all__ = [
    "EffectiveCouplings",
    "EvanescentChannelError",
    "FIGURE_BASE",
    "Kinematics",
    "ParameterError",
    "RouterParams",
    "band_wavenumber",
    "dispersion_energy",
    "effective_couplings",
    "kinematics_from_energy",
    "kinematics_from_k",
    "validate",
]

logger = logging.getLogger(__name__)

_FREQUENCY_FIELDS = ("omega_a", "omega_b", "omega_c", "omega_e", "omega_f")
_HOPPING_FIELDS = ("xi_a", "xi_b")
_COUPLING_FIELDS = ("g_a", "g_b", "g_c")


class ParameterError(ValueError):
    """Raised when router parameters or a query violate their invariants."""

    def __init__(self, message: str, *, field: str | None = None) -> None:
        super().__init__(message)
        self.field = field


class EvanescentChannelError(RuntimeError):
    """Raised when an energy lies outside the propagating band of a waveguide."""

    def __init__(self, channel: str, argument: float) -> None:
        super().__init__(
            f"channel {channel} evanescent (band argument {argument:.6g} outside [-1, 1])"
        )
        self.channel = channel
        self.argument = argument


class RouterParams(BaseModel):
    """Static model parameters, all in units of the reference hopping."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    omega_a: float
    omega_b: float
    omega_c: float
    omega_e: float
    omega_f: float
    xi_a: float
    xi_b: float
    g_a: float = 0.0
    g_b: float = 0.0
    g_c: float = 0.0
    n_junction: int

    @field_validator(*_FREQUENCY_FIELDS)
    @classmethod
    def _finite_frequency(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("frequency must be finite")
        return value

    @field_validator(*_HOPPING_FIELDS)
    @classmethod
    def _positive_hopping(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 0:
            raise ValueError("hopping must be positive")
        return value

    @field_validator(*_COUPLING_FIELDS)
    @classmethod
    def _non_negative_coupling(cls, value: float) -> float:
        if not math.isfinite(value) or value < 0:
            raise ValueError("coupling must be non-negative")
        return value

    @field_validator("n_junction")
    @classmethod
    def _junction_index(cls, value: int) -> int:
        if value < 1:
            raise ValueError("junction index must be ≥ 1")
        return value


FIGURE_BASE = RouterParams(
    omega_a=math.sqrt(2.0),
    omega_b=math.sqrt(2.0),
    omega_c=3.0 * math.sqrt(2.0),
    omega_e=4.0 * math.sqrt(2.0),
    omega_f=3.0 * math.sqrt(2.0),
    xi_a=2.0,
    xi_b=2.0,
    g_a=2.0,
    g_b=2.0,
    g_c=math.sqrt(20.0),
    n_junction=3,
)


def _describe_validation_error(exc: ValidationError) -> ParameterError:
    first = exc.errors()[0]
    loc = first.get("loc") or ("params",)
    field = str(loc[0])
    if first.get("type") == "extra_forbidden":
        return ParameterError(f"{field}: unknown field", field=field)
    message = str(first.get("msg", "invalid value")).removeprefix("Value error, ")
    return ParameterError(f"{field}: {message}", field=field)


def validate(params: RouterParams | Mapping[str, Any]) -> RouterParams:
    """Return checked parameters, raising :class:`ParameterError` on the first violation."""

    if isinstance(params, RouterParams):
        data = params.model_dump()
    elif isinstance(params, Mapping):
        data = dict(params)
    else:
        raise ParameterError("params must be a mapping", field="params")
    try:
        checked = RouterParams.model_validate(data)
    except ValidationError as exc:
        raise _describe_validation_error(exc) from exc
    return params if isinstance(params, RouterParams) else checked


@dataclass(frozen=True, slots=True)
class Kinematics:
    """Energy, wavenumbers and group velocities of both waveguide channels."""

    energy: float
    k_a: float
    k_b: float
    v_a: float
    v_b: float
    delta_e: float


def dispersion_energy(omega_c, omega_d, xi_d, k_d):
    """E = ω_c + ω_d − 2 ξ_d cos k_d; accepts scalars or arrays."""

    return omega_c + omega_d - 2.0 * xi_d * np.cos(k_d)


def band_wavenumber(energy, omega_c, omega_d, xi_d):
    """Invert the dispersion relation.

    Returns ``(k, argument)`` where ``argument = (ω_c + ω_d − E)/(2ξ_d)`` is the
    band cosine; ``k`` is NaN wherever ``|argument| > 1``.
    """

    argument = (omega_c + omega_d - energy) / (2.0 * xi_d)
    with np.errstate(invalid="ignore"):
        k = np.where(np.abs(argument) <= 1.0, np.arccos(np.clip(argument, -1.0, 1.0)), np.nan)
    return k, argument


def _channel_k(params: RouterParams, energy: float, channel: str) -> float:
    omega_d = params.omega_a if channel == "a" else params.omega_b
    xi_d = params.xi_a if channel == "a" else params.xi_b
    k, argument = band_wavenumber(energy, params.omega_c, omega_d, xi_d)
    if not np.isfinite(k):
        raise EvanescentChannelError(channel, float(argument))
    return float(k)


def _kinematics(params: RouterParams, energy: float, k_a: float, k_b: float) -> Kinematics:
    return Kinematics(
        energy=energy,
        k_a=k_a,
        k_b=k_b,
        v_a=2.0 * params.xi_a * math.sin(k_a),
        v_b=2.0 * params.xi_b * math.sin(k_b),
        delta_e=energy - params.omega_e,
    )


def kinematics_from_k(params: RouterParams, k_a: float) -> Kinematics:
    """Derive the energy and channel-b wavenumber from the CRW-a wavenumber."""

    k_a = float(k_a)
    if not 0.0 < k_a < math.pi:
        raise ParameterError("k_a: wavenumber must lie in (0, π)", field="k_a")
    energy = float(dispersion_energy(params.omega_c, params.omega_a, params.xi_a, k_a))
    k_b = _channel_k(params, energy, "b")
    return _kinematics(params, energy, k_a, k_b)


def kinematics_from_energy(params: RouterParams, energy: float) -> Kinematics:
    """Derive both wavenumbers from a total eigenenergy."""

    energy = float(energy)
    if not math.isfinite(energy):
        raise ParameterError("energy: must be finite", field="energy")
    k_a = _channel_k(params, energy, "a")
    k_b = _channel_k(params, energy, "b")
    return _kinematics(params, energy, k_a, k_b)


@dataclass(frozen=True, slots=True)
class EffectiveCouplings:
    """Junction potentials left after eliminating the three-level system.

    ``delta_poly`` is Δ = δ_e(E − ω_f − ω_c) − g_c² and ``b_tilde`` is its
    negative. G and V are ``None`` at the dressed resonance Δ = 0.
    """

    big_g: float | None
    v_pot_a: float | None
    v_pot_b: float | None
    delta_poly: float
    b_tilde: float
    at_pole: bool


def effective_couplings(params: RouterParams, kin: Kinematics) -> EffectiveCouplings:
    detuning_f = kin.energy - params.omega_f - params.omega_c
    delta_poly = kin.delta_e * detuning_f - params.g_c**2
    b_tilde = params.g_c**2 - kin.delta_e * detuning_f
    if delta_poly == 0.0:
        logger.debug("Dressed resonance at E=%s: effective couplings undefined", kin.energy)
        return EffectiveCouplings(None, None, None, delta_poly, b_tilde, True)
    scale = kin.delta_e / delta_poly
    return EffectiveCouplings(
        big_g=params.g_a * params.g_b * scale,
        v_pot_a=params.g_a**2 * scale,
        v_pot_b=params.g_b**2 * scale,
        delta_poly=delta_poly,
        b_tilde=b_tilde,
        at_pole=False,
    )
