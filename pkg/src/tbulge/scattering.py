"""Closed-form single-photon scattering at the T-bulge junction.

Amplitudes come from the junction boundary equations written without any
division: the unknowns are the channel amplitude (t for incidence from CRW-a,
t^a for incidence from CRW-b), the standing-wave amplitude A of the
``A sin(k_b v)`` segment on cavities 1..N, and the atomic amplitudes U_f, U_e.
Eliminating U_f and U_e from this bordered system reproduces the usual
G/V form wherever Δ ≠ 0, but the bordered form stays regular at δ_e = 0,
Δ = 0 and at vanishing couplings.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from .core import Kinematics, ParameterError, RouterParams, band_wavenumber, dispersion_energy

__all__ = [
    "AmplitudeSet",
    "COEFFICIENT_COLUMNS",
    "CoefficientSet",
    "DegenerateChannelError",
    "Port",
    "ScatteringQuery",
    "amplitudes_from_a",
    "amplitudes_from_b",
    "coefficients",
    "equation_residual",
    "evaluate_columns",
    "printed_transmission",
    "published_amplitudes",
    "scatter",
    "wavefunction",
]

logger = logging.getLogger(__name__)


class DegenerateChannelError(RuntimeError):
    """Raised when a channel sits at a band edge (zero group velocity)."""


class Port(str, Enum):
    FROM_A = "a"
    FROM_B = "b"


# Canonical coefficient columns per port, followed by the unweighted transfer value.
COEFFICIENT_COLUMNS: dict[Port, tuple[str, ...]] = {
    Port.FROM_A: ("T_a", "R_a", "T_ba", "T_ba_unweighted"),
    Port.FROM_B: ("R_b", "T_ab", "T_ab_unweighted"),
}

_COLUMN_FIELDS = {
    "T_a": "transmission_a",
    "R_a": "reflection_a",
    "T_ba": "transfer_ba",
    "T_ba_unweighted": "transfer_ba_unweighted",
    "R_b": "reflection_b",
    "T_ab": "transfer_ab",
    "T_ab_unweighted": "transfer_ab_unweighted",
}


@dataclass(frozen=True, slots=True)
class ScatteringQuery:
    port: Port
    kinematics: Kinematics


def _pair(value: complex | None) -> list[float] | None:
    if value is None:
        return None
    return [float(value.real), float(value.imag)]


@dataclass(frozen=True, slots=True)
class AmplitudeSet:
    """Complex amplitudes for one query.

    Incidence from CRW-a fills ``t``, ``r`` and ``t_b``; incidence from CRW-b
    fills ``r_b`` and ``t_a`` (the common left/right value). ``standing_a`` is
    the amplitude A of the segment between the hard wall and the junction.
    """

    port: Port
    standing_a: complex
    u_f: complex
    u_e: complex
    t: complex | None = None
    r: complex | None = None
    t_b: complex | None = None
    r_b: complex | None = None
    t_a: complex | None = None

    def to_dict(self) -> dict[str, Any]:
        names = ("t", "r", "t_b") if self.port is Port.FROM_A else ("r_b", "t_a")
        payload: dict[str, Any] = {"port": self.port.value}
        for name in (*names, "standing_a", "u_f", "u_e"):
            payload[name] = _pair(getattr(self, name))
        return payload


@dataclass(frozen=True, slots=True)
class CoefficientSet:
    """Flux-normalized probabilities for one query."""

    port: Port
    conservation_residual: float
    transmission_a: float | None = None
    reflection_a: float | None = None
    transfer_ba: float | None = None
    transfer_ba_unweighted: float | None = None
    reflection_b: float | None = None
    transfer_ab: float | None = None
    transfer_ab_unweighted: float | None = None

    def values(self) -> dict[str, float]:
        """Coefficient columns for this port, keyed by their table names."""

        return {
            column: getattr(self, _COLUMN_FIELDS[column])
            for column in COEFFICIENT_COLUMNS[self.port]
        }

    def canonical(self) -> dict[str, float]:
        """The conserved coefficients only (no unweighted variants)."""

        return {
            name: value for name, value in self.values().items() if not name.endswith("_unweighted")
        }

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"port": self.port.value}
        payload.update(self.values())
        payload["residual"] = self.conservation_residual
        return payload


def _solve_stack(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(matrix, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        pass
    solution = np.empty_like(rhs)
    for index in range(matrix.shape[0]):
        try:
            solution[index] = np.linalg.solve(matrix[index], rhs[index])
        except np.linalg.LinAlgError:
            logger.warning(
                "Junction system singular (bound state in the continuum); "
                "using the minimum-norm solution for point %s",
                index,
            )
            solution[index] = np.linalg.lstsq(matrix[index], rhs[index], rcond=None)[0]
    return solution


def _junction_amplitudes(
    port: Port,
    *,
    g_a: np.ndarray,
    g_b: np.ndarray,
    g_c: np.ndarray,
    v_a: np.ndarray,
    v_b: np.ndarray,
    k_b: np.ndarray,
    n_junction: np.ndarray,
    detuning_f: np.ndarray,
    delta_e: np.ndarray,
) -> dict[str, np.ndarray]:
    """Solve the bordered junction system for a stack of points."""

    size = np.shape(g_a)[0]
    phase = np.exp(-1j * k_b * n_junction)
    node = np.sin(k_b * n_junction)

    matrix = np.zeros((size, 4, 4), dtype=complex)
    rhs = np.zeros((size, 4), dtype=complex)
    # CRW-a junction row, CRW-b junction row, |f> row, |e> row
    matrix[:, 0, 0] = 1j * v_a
    matrix[:, 0, 2] = -g_a
    matrix[:, 1, 1] = -0.5 * v_b * phase
    matrix[:, 1, 2] = -g_b
    matrix[:, 2, 0] = -g_a
    matrix[:, 2, 1] = -g_b * node
    matrix[:, 2, 2] = detuning_f
    matrix[:, 2, 3] = -g_c
    matrix[:, 3, 2] = -g_c
    # |e> is dark when g_c = 0; pin U_e = 0 there.
    matrix[:, 3, 3] = np.where(g_c == 0.0, 1.0, delta_e)
    if port is Port.FROM_A:
        rhs[:, 0] = 1j * v_a
    else:
        rhs[:, 1] = 1j * v_b * phase

    solution = _solve_stack(matrix, rhs)
    channel, standing, u_f, u_e = solution.T
    result = {"standing_a": standing, "u_f": u_f, "u_e": u_e}
    if port is Port.FROM_A:
        result["t"] = channel
        result["r"] = channel - 1.0
        result["t_b"] = standing * node * phase
    else:
        result["t_a"] = channel
        result["r_b"] = (standing * node - phase) * phase
    return result


def _coefficient_columns(
    port: Port, amplitudes: Mapping[str, np.ndarray], v_a: np.ndarray, v_b: np.ndarray
) -> dict[str, np.ndarray]:
    if port is Port.FROM_A:
        transmission = np.abs(amplitudes["t"]) ** 2
        reflection = np.abs(amplitudes["r"]) ** 2
        transfer_raw = np.abs(amplitudes["t_b"]) ** 2
        transfer = (v_b / v_a) * transfer_raw
        residual = np.abs(transmission + reflection + transfer - 1.0)
        return {
            "T_a": transmission,
            "R_a": reflection,
            "T_ba": transfer,
            "T_ba_unweighted": transfer_raw,
            "residual": residual,
        }
    reflection = np.abs(amplitudes["r_b"]) ** 2
    transfer_raw = 2.0 * np.abs(amplitudes["t_a"]) ** 2
    transfer = (v_a / v_b) * transfer_raw
    residual = np.abs(reflection + transfer - 1.0)
    return {
        "R_b": reflection,
        "T_ab": transfer,
        "T_ab_unweighted": transfer_raw,
        "residual": residual,
    }


def _point_inputs(params: RouterParams, kin: Kinematics) -> dict[str, np.ndarray]:
    if kin.v_a <= 0.0 or kin.v_b <= 0.0:
        raise DegenerateChannelError(
            f"degenerate channel (v_a={kin.v_a:.6g}, v_b={kin.v_b:.6g})"
        )
    values = {
        "g_a": params.g_a,
        "g_b": params.g_b,
        "g_c": params.g_c,
        "v_a": kin.v_a,
        "v_b": kin.v_b,
        "k_b": kin.k_b,
        "n_junction": params.n_junction,
        "detuning_f": kin.energy - params.omega_f - params.omega_c,
        "delta_e": kin.delta_e,
    }
    return {name: np.array([value], dtype=float) for name, value in values.items()}


def _point_amplitudes(port: Port, params: RouterParams, kin: Kinematics) -> AmplitudeSet:
    columns = _junction_amplitudes(port, **_point_inputs(params, kin))
    scalars = {name: complex(values[0]) for name, values in columns.items()}
    return AmplitudeSet(port=port, **scalars)


def amplitudes_from_a(params: RouterParams, kin: Kinematics) -> AmplitudeSet:
    """Amplitudes t, r, t^b for a photon incident from the infinite CRW-a."""

    return _point_amplitudes(Port.FROM_A, params, kin)


def amplitudes_from_b(params: RouterParams, kin: Kinematics) -> AmplitudeSet:
    """Amplitudes r^b, t^a for a photon launched down the semi-infinite CRW-b."""

    return _point_amplitudes(Port.FROM_B, params, kin)


def coefficients(params: RouterParams, kin: Kinematics, amps: AmplitudeSet) -> CoefficientSet:
    del params
    v_a = np.array([kin.v_a])
    v_b = np.array([kin.v_b])
    if amps.port is Port.FROM_A:
        columns = {name: np.array([getattr(amps, name)]) for name in ("t", "r", "t_b")}
    else:
        columns = {name: np.array([getattr(amps, name)]) for name in ("r_b", "t_a")}
    values = _coefficient_columns(amps.port, columns, v_a, v_b)
    fields = {
        _COLUMN_FIELDS[name]: float(column[0])
        for name, column in values.items()
        if name != "residual"
    }
    return CoefficientSet(
        port=amps.port, conservation_residual=float(values["residual"][0]), **fields
    )


def scatter(params: RouterParams, query: ScatteringQuery) -> tuple[AmplitudeSet, CoefficientSet]:
    """Evaluate amplitudes and coefficients for one query."""

    kin = query.kinematics
    if query.port is Port.FROM_A:
        amps = amplitudes_from_a(params, kin)
    else:
        amps = amplitudes_from_b(params, kin)
    return amps, coefficients(params, kin, amps)


Site = tuple[str, int]


def wavefunction(
    params: RouterParams, kin: Kinematics, amps: AmplitudeSet, site: Site
) -> complex:
    """Photon amplitude U_u^a or U_v^b from the piecewise scattering ansatz."""

    waveguide, index = site
    index = int(index)
    n_junction = params.n_junction
    if waveguide == "a":
        if amps.port is Port.FROM_A:
            if index < 0:
                return complex(np.exp(1j * kin.k_a * index) + amps.r * np.exp(-1j * kin.k_a * index))
            return complex(amps.t * np.exp(1j * kin.k_a * index))
        return complex(amps.t_a * np.exp(1j * kin.k_a * abs(index)))
    if waveguide != "b":
        raise ParameterError(f"site: unknown waveguide {waveguide!r}", field="site")
    if index < 1:
        raise ParameterError("site: CRW-b index must be ≥ 1", field="site")
    if index <= n_junction:
        return complex(amps.standing_a * math.sin(kin.k_b * index))
    if amps.port is Port.FROM_A:
        return complex(amps.t_b * np.exp(1j * kin.k_b * index))
    return complex(np.exp(-1j * kin.k_b * index) + amps.r_b * np.exp(1j * kin.k_b * index))


def equation_residual(
    params: RouterParams,
    kin: Kinematics,
    amps: AmplitudeSet,
    sites: Iterable[Site] | None = None,
) -> float:
    """Largest residual of the discrete eigenvalue equations.

    Covers the photon rows at the requested sites (both junction rows by
    default) and the two atomic rows.
    """

    n_junction = params.n_junction
    if sites is None:
        reach = n_junction + 5
        sites = [("a", u) for u in range(-reach, reach + 1)]
        sites += [("b", v) for v in range(1, reach + 1)]

    def amplitude(waveguide: str, index: int) -> complex:
        if waveguide == "b" and index == 0:
            return 0j
        return wavefunction(params, kin, amps, (waveguide, index))

    energy = kin.energy
    worst = 0.0
    for waveguide, index in sites:
        if waveguide == "a":
            onsite = params.omega_a + params.omega_c
            hopping = params.xi_a
            source = params.g_a * amps.u_f if index == 0 else 0.0
        else:
            onsite = params.omega_b + params.omega_c
            hopping = params.xi_b
            source = params.g_b * amps.u_f if index == n_junction else 0.0
        row = (
            (energy - onsite) * amplitude(waveguide, index)
            + hopping * (amplitude(waveguide, index - 1) + amplitude(waveguide, index + 1))
            - source
        )
        worst = max(worst, abs(row))

    u_0 = amplitude("a", 0)
    u_n = amplitude("b", n_junction)
    row_f = (
        (energy - params.omega_f - params.omega_c) * amps.u_f
        - params.g_a * u_0
        - params.g_b * u_n
        - params.g_c * amps.u_e
    )
    row_e = (energy - params.omega_e) * amps.u_e - params.g_c * amps.u_f
    return max(worst, abs(row_f), abs(row_e))


def _published_terms(params: RouterParams, kin: Kinematics) -> dict[str, complex]:
    for name, value in (("g_a", params.g_a), ("g_b", params.g_b), ("v_a", kin.v_a), ("delta_e", kin.delta_e)):
        if value == 0.0:
            raise ParameterError(f"{name}: printed closed forms require a non-zero value", field=name)
    ratio = params.g_a * kin.v_b / (params.g_b * kin.v_a)
    bracket = params.g_c**2 / kin.delta_e - (kin.energy - params.omega_f - params.omega_c)
    node = math.sin(kin.k_b * params.n_junction)
    forward = np.exp(1j * kin.k_b * params.n_junction)
    arm = 2j * (params.g_b / params.g_a) * node
    dressed = 1j * bracket * kin.v_b / (params.g_a * params.g_b)
    return {
        "ratio": ratio,
        "node": node,
        "forward": forward,
        "arm": arm,
        "dressed": dressed,
        "denominator": ratio - arm * forward + dressed,
    }


def published_amplitudes(params: RouterParams, kin: Kinematics, port: Port) -> dict[str, complex]:
    """The nondimensionalized closed forms, with ω_s read as ω_f.

    For incidence from CRW-a the transmission is the re-derived form
    (v_b in the bracket term, opposite overall sign to the printed one).
    """

    terms = _published_terms(params, kin)
    denominator = terms["denominator"]
    if port is Port.FROM_A:
        return {
            "t_b": complex(2j * terms["node"] / denominator),
            "t": complex((terms["dressed"] - terms["arm"] * terms["forward"]) / denominator),
            "r": complex(-terms["ratio"] / denominator),
        }
    backward = np.conj(terms["forward"])
    numerator = terms["ratio"] - terms["arm"] * backward + terms["dressed"]
    return {
        "r_b": complex(-numerator / denominator),
        "t_a": complex(2j * (kin.v_b / kin.v_a) * terms["node"] / denominator),
    }


def printed_transmission(params: RouterParams, kin: Kinematics) -> complex:
    """Transmission amplitude exactly as printed (v_a in the bracket term).

    Agrees with the re-derived value in modulus only when v_a = v_b.
    """

    terms = _published_terms(params, kin)
    printed_dressed = terms["dressed"] * kin.v_a / kin.v_b
    value = complex(-(printed_dressed - terms["arm"] * terms["forward"]) / terms["denominator"])
    logger.debug(
        "Printed transmission %s vs re-derived %s",
        value,
        published_amplitudes(params, kin, Port.FROM_A)["t"],
    )
    return value


_PARAM_COLUMNS = (
    "omega_a",
    "omega_b",
    "omega_c",
    "omega_e",
    "omega_f",
    "xi_a",
    "xi_b",
    "g_a",
    "g_b",
    "g_c",
    "n_junction",
)


def evaluate_columns(columns: Mapping[str, Any], port: Port) -> dict[str, np.ndarray]:
    """Vectorized evaluation over columns of parameters and CRW-a wavenumbers.

    ``columns`` holds every RouterParams field plus ``k_a`` as scalars or
    equal-length arrays. Points with an evanescent or band-edge channel are
    returned with ``propagating`` False and NaN amplitudes/coefficients.
    """

    missing = [name for name in (*_PARAM_COLUMNS, "k_a") if name not in columns]
    if missing:
        raise ParameterError(f"{missing[0]}: missing column", field=missing[0])
    names = (*_PARAM_COLUMNS, "k_a")
    arrays = np.broadcast_arrays(*(np.asarray(columns[name], dtype=float) for name in names))
    data = {name: np.ravel(array) for name, array in zip(names, arrays)}

    k_a = data["k_a"]
    energy = dispersion_energy(data["omega_c"], data["omega_a"], data["xi_a"], k_a)
    k_b, _ = band_wavenumber(energy, data["omega_c"], data["omega_b"], data["xi_b"])
    v_a = 2.0 * data["xi_a"] * np.sin(k_a)
    v_b = 2.0 * data["xi_b"] * np.sin(k_b)
    with np.errstate(invalid="ignore"):
        propagating = (k_a > 0.0) & (k_a < math.pi) & np.isfinite(k_b) & (v_a > 0.0) & (v_b > 0.0)

    result: dict[str, np.ndarray] = {
        "energy": energy,
        "k_b": k_b,
        "v_a": v_a,
        "v_b": v_b,
        "delta_e": energy - data["omega_e"],
        "propagating": propagating,
    }
    size = k_a.shape[0]
    amplitude_names = ("t", "r", "t_b") if port is Port.FROM_A else ("r_b", "t_a")
    for name in (*amplitude_names, "standing_a", "u_f", "u_e"):
        result[name] = np.full(size, np.nan + 0j, dtype=complex)
    for name in (*COEFFICIENT_COLUMNS[port], "residual"):
        result[name] = np.full(size, np.nan)

    if np.any(propagating):
        index = np.flatnonzero(propagating)
        amplitudes = _junction_amplitudes(
            port,
            g_a=data["g_a"][index],
            g_b=data["g_b"][index],
            g_c=data["g_c"][index],
            v_a=v_a[index],
            v_b=v_b[index],
            k_b=k_b[index],
            n_junction=data["n_junction"][index],
            detuning_f=(energy - data["omega_f"] - data["omega_c"])[index],
            delta_e=(energy - data["omega_e"])[index],
        )
        for name, values in amplitudes.items():
            result[name][index] = values
        for name, values in _coefficient_columns(port, amplitudes, v_a[index], v_b[index]).items():
            result[name][index] = values
    return result
