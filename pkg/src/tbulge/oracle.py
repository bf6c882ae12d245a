"""Lattice ground truth for the junction scattering problem.

The full single-excitation Hamiltonian is assembled on a truncated lattice
(CRW-a sites u = -L..L, CRW-b sites v = 1..N+len_b, then |f> and |e>) and the
scattering is extracted without the closed-form elimination, either by a
monochromatic linear solve with outgoing boundary self-energies or by
propagating a Gaussian wavepacket in time.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import sparse
from scipy.sparse.linalg import splu, spsolve

from .core import Kinematics, ParameterError, RouterParams, band_wavenumber, dispersion_energy
from .export import write_json
from .scattering import (
    AmplitudeSet,
    CoefficientSet,
    DegenerateChannelError,
    Port,
    ScatteringQuery,
    evaluate_columns,
)

__all__ = [
    "DiscrepancyReport",
    "FitInconsistency",
    "LatticeConfig",
    "LatticeLayout",
    "LatticeSolution",
    "LatticeTooShort",
    "NonStationary",
    "NormDrift",
    "OracleError",
    "OracleMode",
    "SolveFailure",
    "TOLERANCES",
    "WavepacketConfig",
    "assemble_hamiltonian",
    "compare",
    "dump_solution",
    "packet_lattice",
    "packet_sigma",
    "propagate_wavepacket",
    "solve_frequency_domain",
]

logger = logging.getLogger(__name__)

_EDGE_WIDTH = 10
_EDGE_TOL = 1e-10
_CHECK_INTERVAL = 1.0
_DEFAULT_SIGMA_K = 0.02 * math.pi
_PHASE_SPREAD = 0.04 * math.pi
_DWELL_SITES = 1000
_SPECTRUM_SPAN = 6.0
_SPECTRUM_POINTS = 241


class OracleError(RuntimeError):
    """Base class for lattice oracle failures."""


class SolveFailure(OracleError):
    """The truncated frequency-domain system could not be solved."""


class FitInconsistency(OracleError):
    """A fitted plane-wave amplitude varies across the fit window."""


class LatticeTooShort(OracleError):
    """The wavepacket reached a truncated end of the lattice."""


class NonStationary(OracleError):
    """Region populations did not settle before the time limit."""


class NormDrift(OracleError):
    """The propagated state lost unitarity beyond tolerance."""


class OracleMode(str, Enum):
    FREQUENCY_DOMAIN = "freq"
    WAVEPACKET = "packet"


TOLERANCES: dict[OracleMode, float] = {
    OracleMode.FREQUENCY_DOMAIN: 1e-10,
    OracleMode.WAVEPACKET: 2e-2,
}


class WavepacketConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    k_center: float | None = None
    sigma_k: Annotated[float, Field(gt=0.0)] | None = None
    launch_offset: int | None = Field(default=None, ge=1)
    max_time: float = Field(default=2000.0, gt=0.0)
    norm_tol: float = Field(default=1e-8, gt=0.0)
    time_step: float = Field(default=0.05, gt=0.0)
    stationary_tol: float = Field(default=1e-6, gt=0.0)
    zone_tol: float = Field(default=1e-7, gt=0.0)


class LatticeConfig(BaseModel):
    """Truncation and extraction settings, read from the ``oracle`` config key."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    half_len_a: int = Field(default=200, ge=20)
    len_b: int = Field(default=200, ge=20)
    mode: OracleMode = OracleMode.FREQUENCY_DOMAIN
    wavepacket: WavepacketConfig | None = None
    fit_margin: int = Field(default=5, ge=1)
    fit_tol: float = Field(default=1e-8, gt=0.0)


@dataclass(frozen=True, slots=True)
class LatticeLayout:
    """Index map of the truncated single-excitation basis."""

    half_len_a: int
    n_junction: int
    len_b: int

    @classmethod
    def for_params(cls, params: RouterParams, cfg: LatticeConfig) -> "LatticeLayout":
        return cls(cfg.half_len_a, params.n_junction, cfg.len_b)

    @property
    def size_a(self) -> int:
        return 2 * self.half_len_a + 1

    @property
    def top_b(self) -> int:
        return self.n_junction + self.len_b

    @property
    def size(self) -> int:
        return self.size_a + self.top_b + 2

    @property
    def index_f(self) -> int:
        return self.size - 2

    @property
    def index_e(self) -> int:
        return self.size - 1

    def index_a(self, u):
        return np.asarray(u) + self.half_len_a

    def index_b(self, v):
        return self.size_a + np.asarray(v) - 1

    @property
    def sites_a(self) -> np.ndarray:
        return np.arange(-self.half_len_a, self.half_len_a + 1)

    @property
    def sites_b(self) -> np.ndarray:
        return np.arange(1, self.top_b + 1)


@dataclass(frozen=True)
class LatticeSolution:
    """Lattice state plus everything extracted from it."""

    mode: OracleMode
    port: Port
    layout: LatticeLayout
    state: np.ndarray
    coefficients: CoefficientSet
    amplitudes: AmplitudeSet | None = None
    residuals: dict[str, float] = field(default_factory=dict)
    populations: dict[str, float] = field(default_factory=dict)
    elapsed_time: float | None = None
    spectrum: tuple[np.ndarray, np.ndarray] | None = None

    def site_a(self, u: int) -> complex:
        return complex(self.state[int(self.layout.index_a(u))])

    def site_b(self, v: int) -> complex:
        return complex(self.state[int(self.layout.index_b(v))])

    @property
    def u_f(self) -> complex:
        return complex(self.state[self.layout.index_f])

    @property
    def u_e(self) -> complex:
        return complex(self.state[self.layout.index_e])

    def to_dict(self, *, include_state: bool = True) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "mode": self.mode.value,
            "port": self.port.value,
            "layout": {
                "half_len_a": self.layout.half_len_a,
                "n_junction": self.layout.n_junction,
                "len_b": self.layout.len_b,
                "dimension": self.layout.size,
            },
            "coefficients": self.coefficients.to_dict(),
            "amplitudes": self.amplitudes.to_dict() if self.amplitudes else None,
            "residuals": dict(self.residuals),
            "populations": dict(self.populations),
            "elapsed_time": self.elapsed_time,
        }
        if include_state:
            payload["state"] = np.column_stack([self.state.real, self.state.imag]).tolist()
        return payload


def assemble_hamiltonian(params: RouterParams, cfg: LatticeConfig) -> sparse.csr_matrix:
    """Sparse single-excitation Hamiltonian on the truncated lattice."""

    layout = LatticeLayout.for_params(params, cfg)
    index_a = layout.index_a(layout.sites_a)
    index_b = layout.index_b(layout.sites_b)
    f, e = layout.index_f, layout.index_e

    diagonal = np.concatenate(
        [
            np.full(layout.size_a, params.omega_a + params.omega_c),
            np.full(layout.top_b, params.omega_b + params.omega_c),
            [params.omega_f + params.omega_c, params.omega_e],
        ]
    )
    rows = [np.arange(layout.size)]
    cols = [np.arange(layout.size)]
    values = [diagonal]

    def bond(left: np.ndarray, right: np.ndarray, strength: float) -> None:
        rows.extend([left, right])
        cols.extend([right, left])
        values.extend([np.full(left.shape, strength), np.full(left.shape, strength)])

    bond(index_a[:-1], index_a[1:], -params.xi_a)
    # v = 1 has no lower neighbour (hard wall)
    bond(index_b[:-1], index_b[1:], -params.xi_b)
    bond(np.array([layout.index_a(0)]), np.array([f]), params.g_a)
    bond(np.array([layout.index_b(params.n_junction)]), np.array([f]), params.g_b)
    bond(np.array([f]), np.array([e]), params.g_c)

    hamiltonian = sparse.coo_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(layout.size, layout.size),
        dtype=complex,
    ).tocsr()
    hamiltonian.eliminate_zeros()
    return hamiltonian


def _require_propagating(kin: Kinematics) -> None:
    if kin.v_a <= 0.0 or kin.v_b <= 0.0:
        raise DegenerateChannelError(f"degenerate channel (v_a={kin.v_a:.6g}, v_b={kin.v_b:.6g})")


def _incident_wave(layout: LatticeLayout, kin: Kinematics, port: Port) -> np.ndarray:
    incident = np.zeros(layout.size, dtype=complex)
    if port is Port.FROM_A:
        incident[layout.index_a(layout.sites_a)] = np.exp(1j * kin.k_a * layout.sites_a)
    else:
        incident[layout.index_b(layout.sites_b)] = np.exp(-1j * kin.k_b * layout.sites_b)
    return incident


def _phase_fit(
    values: np.ndarray, phases: np.ndarray, tolerance: float, label: str
) -> tuple[complex, float]:
    amplitude = np.vdot(phases, values) / np.vdot(phases, phases)
    spread = float(np.max(np.abs(values - amplitude * phases)))
    if spread > tolerance * max(1.0, abs(amplitude)):
        raise FitInconsistency(
            f"{label} amplitude varies by {spread:.3e} across {values.size} fit sites"
        )
    return complex(amplitude), spread


def _bond_current(state: np.ndarray, indices: np.ndarray, hopping: float) -> float:
    """Mean probability current 2ξ Im(U_j* U_{j+1}) over consecutive sites."""

    return float(np.mean(2.0 * hopping * np.imag(np.conj(state[indices[:-1]]) * state[indices[1:]])))


def solve_frequency_domain(
    params: RouterParams, cfg: LatticeConfig, query: ScatteringQuery
) -> LatticeSolution:
    """Monochromatic scattering solve with exact outgoing boundaries."""

    kin = query.kinematics
    _require_propagating(kin)
    layout = LatticeLayout.for_params(params, cfg)
    hamiltonian = assemble_hamiltonian(params, cfg)
    L, top = layout.half_len_a, layout.top_b
    left_end, right_end = int(layout.index_a(-L)), int(layout.index_a(L))
    top_end = int(layout.index_b(top))

    incident = _incident_wave(layout, kin, query.port)
    defect = kin.energy * incident - hamiltonian @ incident
    # the plane wave continues past the truncated ends
    if query.port is Port.FROM_A:
        defect[left_end] += params.xi_a * np.exp(-1j * kin.k_a * (L + 1))
        defect[right_end] += params.xi_a * np.exp(1j * kin.k_a * (L + 1))
    else:
        defect[top_end] += params.xi_b * np.exp(-1j * kin.k_b * (top + 1))

    boundary = np.zeros(layout.size, dtype=complex)
    boundary[left_end] = params.xi_a * np.exp(1j * kin.k_a)
    boundary[right_end] = params.xi_a * np.exp(1j * kin.k_a)
    boundary[top_end] = params.xi_b * np.exp(1j * kin.k_b)
    operator = (
        sparse.identity(layout.size, dtype=complex, format="csc") * kin.energy
        - hamiltonian.tocsc()
        + sparse.diags(boundary, format="csc")
    )
    scattered = spsolve(operator, -defect)
    if not np.all(np.isfinite(scattered)):
        raise SolveFailure(
            f"singular lattice system at E={kin.energy:.12g} for parameters {params.model_dump()}"
        )
    solve_residual = float(np.linalg.norm(operator @ scattered + defect))
    state = incident + scattered
    logger.debug("Frequency-domain solve: dimension %s, residual %.3e", layout.size, solve_residual)

    margin = cfg.fit_margin
    left = layout.index_a(np.arange(-L + margin, -margin + 1))
    right = layout.index_a(np.arange(margin, L - margin + 1))
    beyond_sites = np.arange(params.n_junction + margin, top - margin + 1)
    beyond = layout.index_b(beyond_sites)
    u_left = np.arange(-L + margin, -margin + 1)
    u_right = np.arange(margin, L - margin + 1)
    residuals: dict[str, float] = {"solve": solve_residual}

    segment_sites = np.arange(1, params.n_junction + 1)
    sines = np.sin(kin.k_b * segment_sites)
    standing = complex(np.vdot(sines, state[layout.index_b(segment_sites)]) / np.dot(sines, sines))

    if query.port is Port.FROM_A:
        r, residuals["fit_left"] = _phase_fit(
            scattered[left], np.exp(-1j * kin.k_a * u_left), cfg.fit_tol, "reflected"
        )
        forward, residuals["fit_right"] = _phase_fit(
            scattered[right], np.exp(1j * kin.k_a * u_right), cfg.fit_tol, "transmitted"
        )
        t_b, residuals["fit_b"] = _phase_fit(
            state[beyond], np.exp(1j * kin.k_b * beyond_sites), cfg.fit_tol, "transferred"
        )
        amplitudes = AmplitudeSet(
            port=query.port,
            standing_a=standing,
            u_f=complex(state[layout.index_f]),
            u_e=complex(state[layout.index_e]),
            t=forward + 1.0,
            r=r,
            t_b=t_b,
        )
        flux_in = _bond_current(incident, left, params.xi_a)
        transmission = _bond_current(state, right, params.xi_a) / flux_in
        reflection = -_bond_current(scattered, left, params.xi_a) / flux_in
        transfer = _bond_current(state, beyond, params.xi_b) / flux_in
        coefficients = CoefficientSet(
            port=query.port,
            conservation_residual=abs(transmission + reflection + transfer - 1.0),
            transmission_a=transmission,
            reflection_a=reflection,
            transfer_ba=transfer,
            transfer_ba_unweighted=abs(t_b) ** 2,
        )
    else:
        t_left, residuals["fit_left"] = _phase_fit(
            state[left], np.exp(-1j * kin.k_a * u_left), cfg.fit_tol, "left transfer"
        )
        t_right, residuals["fit_right"] = _phase_fit(
            state[right], np.exp(1j * kin.k_a * u_right), cfg.fit_tol, "right transfer"
        )
        r_b, residuals["fit_b"] = _phase_fit(
            scattered[beyond], np.exp(1j * kin.k_b * beyond_sites), cfg.fit_tol, "reflected"
        )
        residuals["left_right"] = abs(t_left - t_right)
        if residuals["left_right"] > cfg.fit_tol * max(1.0, abs(t_left)):
            raise FitInconsistency(
                f"left/right transfer amplitudes differ by {residuals['left_right']:.3e}"
            )
        t_a = 0.5 * (t_left + t_right)
        amplitudes = AmplitudeSet(
            port=query.port,
            standing_a=standing,
            u_f=complex(state[layout.index_f]),
            u_e=complex(state[layout.index_e]),
            r_b=r_b,
            t_a=t_a,
        )
        flux_in = -_bond_current(incident, beyond, params.xi_b)
        reflection = _bond_current(scattered, beyond, params.xi_b) / flux_in
        transfer = (
            _bond_current(state, right, params.xi_a) - _bond_current(state, left, params.xi_a)
        ) / flux_in
        coefficients = CoefficientSet(
            port=query.port,
            conservation_residual=abs(reflection + transfer - 1.0),
            reflection_b=reflection,
            transfer_ab=transfer,
            transfer_ab_unweighted=2.0 * abs(t_a) ** 2,
        )

    return LatticeSolution(
        mode=OracleMode.FREQUENCY_DOMAIN,
        port=query.port,
        layout=layout,
        state=state,
        coefficients=coefficients,
        amplitudes=amplitudes,
        residuals=residuals,
    )


def _region_indices(layout: LatticeLayout) -> dict[str, np.ndarray]:
    sites_a, sites_b = layout.sites_a, layout.sites_b
    n_junction = layout.n_junction
    return {
        "left": layout.index_a(sites_a[sites_a < 0]),
        "right": layout.index_a(sites_a[sites_a > 0]),
        "b_beyond": layout.index_b(sites_b[sites_b > n_junction]),
        "junction": np.concatenate(
            [
                [layout.index_a(0)],
                layout.index_b(sites_b[sites_b <= n_junction]),
                [layout.index_f, layout.index_e],
            ]
        ),
    }


def _edge_indices(layout: LatticeLayout) -> np.ndarray:
    sites_a = layout.sites_a
    return np.concatenate(
        [
            layout.index_a(sites_a[:_EDGE_WIDTH]),
            layout.index_a(sites_a[-_EDGE_WIDTH:]),
            layout.index_b(layout.sites_b[-_EDGE_WIDTH:]),
        ]
    )


def _zone_indices(layout: LatticeLayout, reach: int) -> np.ndarray:
    sites_a, sites_b = layout.sites_a, layout.sites_b
    return np.concatenate(
        [
            layout.index_a(sites_a[np.abs(sites_a) < reach]),
            layout.index_b(sites_b[sites_b < layout.n_junction + reach]),
            [layout.index_f, layout.index_e],
        ]
    )


def packet_sigma(packet: WavepacketConfig, n_junction: int) -> float:
    """Configured packet width, or one that narrows as the junction segment grows."""

    if packet.sigma_k is not None:
        return packet.sigma_k
    return min(_DEFAULT_SIGMA_K, _PHASE_SPREAD / n_junction)


def packet_lattice(params: RouterParams, packet: WavepacketConfig | None = None) -> LatticeConfig:
    """Wavepacket lattice with arms long enough to hold the packet, its dwell and its exit."""

    packet = packet or WavepacketConfig()
    sigma = packet_sigma(packet, params.n_junction)
    width = int(math.ceil(6.0 / sigma))
    offset = packet.launch_offset or width
    arm = offset + width + int(math.ceil(4.0 / sigma)) + _DWELL_SITES
    return LatticeConfig(
        half_len_a=arm, len_b=arm, mode=OracleMode.WAVEPACKET, wavepacket=packet
    )


def _packet_spectrum(
    sites: np.ndarray, initial: np.ndarray, k_center: float, sigma: float, incoming_sign: float
) -> tuple[np.ndarray, np.ndarray]:
    """Weights of the incoming plane waves e^{±ikx} that make up the launched packet."""

    ks = k_center + sigma * np.linspace(-_SPECTRUM_SPAN, _SPECTRUM_SPAN, _SPECTRUM_POINTS)
    ks = ks[(ks > 0.0) & (ks < math.pi)]
    overlaps = np.exp(-1j * incoming_sign * np.outer(ks, sites)) @ initial
    weights = np.abs(overlaps) ** 2
    return ks, weights / weights.sum()


def propagate_wavepacket(
    params: RouterParams, cfg: LatticeConfig, query: ScatteringQuery
) -> LatticeSolution:
    """Scatter a narrow Gaussian packet and read coefficients from region populations.

    The run stops once the junction zone is empty and the region populations
    are stationary. Content reaching a truncated end reflects but stays in
    its region until it travels back to the zone, so the run may continue past
    that moment until the fastest reflected front could return.
    """

    kin = query.kinematics
    _require_propagating(kin)
    packet = cfg.wavepacket or WavepacketConfig()
    from_a = query.port is Port.FROM_A
    k_center = packet.k_center
    if k_center is None:
        k_center = kin.k_a if from_a else kin.k_b
    sigma = packet_sigma(packet, params.n_junction)
    if not (0.0 < k_center - 3.0 * sigma and k_center + 3.0 * sigma < math.pi):
        raise ParameterError(
            "wavepacket: k_center ± 3 sigma_k must lie inside (0, π)", field="wavepacket"
        )

    layout = LatticeLayout.for_params(params, cfg)
    width = int(math.ceil(6.0 / sigma))
    offset = packet.launch_offset or width
    arm = layout.half_len_a if from_a else layout.len_b
    if arm - offset < width + _EDGE_WIDTH:
        raise LatticeTooShort(
            f"incidence arm of {arm} sites cannot hold a packet launched {offset} sites out"
        )

    state = np.zeros(layout.size, dtype=complex)
    if from_a:
        sites = layout.sites_a
        incidence = layout.index_a(sites)
        state[incidence] = np.exp(1j * k_center * sites - sigma**2 * (sites + offset) ** 2)
        speed = 2.0 * params.xi_a * math.sin(k_center)
        carrier = dispersion_energy(params.omega_c, params.omega_a, params.xi_a, k_center)
    else:
        sites = layout.sites_b
        incidence = layout.index_b(sites)
        state[incidence] = np.exp(
            -1j * k_center * sites - sigma**2 * (sites - params.n_junction - offset) ** 2
        )
        speed = 2.0 * params.xi_b * math.sin(k_center)
        carrier = dispersion_energy(params.omega_c, params.omega_b, params.xi_b, k_center)
    state /= np.linalg.norm(state)
    spectrum = _packet_spectrum(
        sites, state[incidence], k_center, sigma, 1.0 if from_a else -1.0
    )

    identity = sparse.identity(layout.size, dtype=complex, format="csc")
    shifted = assemble_hamiltonian(params, cfg).tocsc() - float(carrier) * identity
    half_step = 0.5j * packet.time_step * shifted
    implicit = splu((identity + half_step).tocsc())
    explicit = (identity - half_step).tocsr()

    regions = _region_indices(layout)
    edges = _edge_indices(layout)
    zone = _zone_indices(layout, offset)
    steps_per_check = max(1, round(_CHECK_INTERVAL / packet.time_step))
    earliest = offset / speed
    return_sites = min(layout.half_len_a, layout.len_b) - _EDGE_WIDTH - offset
    fastest = 2.0 * max(params.xi_a, params.xi_b)
    deadline: float | None = None
    elapsed = 0.0
    drift = 0.0
    previous: dict[str, float] | None = None
    populations: dict[str, float] = {}

    while elapsed < packet.max_time:
        for _ in range(steps_per_check):
            state = implicit.solve(explicit @ state)
        elapsed += steps_per_check * packet.time_step
        density = np.abs(state) ** 2
        drift = abs(float(density.sum()) - 1.0)
        if drift > packet.norm_tol:
            raise NormDrift(f"norm drifted by {drift:.3e} at t={elapsed:.3f}")
        edge_population = float(density[edges].sum())
        if deadline is None and edge_population > _EDGE_TOL:
            deadline = elapsed + max(0, return_sites) / fastest
            logger.debug(
                "Population %.3e reached a truncated end at t=%.2f; settling deadline t=%.2f",
                edge_population,
                elapsed,
                deadline,
            )
        populations = {name: float(density[index].sum()) for name, index in regions.items()}
        zone_population = float(density[zone].sum())
        if (
            previous is not None
            and elapsed >= earliest
            and zone_population < packet.zone_tol
            and max(abs(populations[name] - previous[name]) for name in populations)
            < packet.stationary_tol * steps_per_check * packet.time_step
        ):
            break
        if deadline is not None and elapsed >= deadline:
            raise LatticeTooShort(
                f"junction zone still holds {zone_population:.3e} at t={elapsed:.3f}, "
                "when content reflected from a truncated end can return"
            )
        previous = populations
    else:
        raise NonStationary(f"populations still changing at max_time={packet.max_time}")

    logger.debug("Wavepacket settled at t=%.2f with populations %s", elapsed, populations)
    if from_a:
        coefficients = CoefficientSet(
            port=query.port,
            conservation_residual=abs(
                populations["left"] + populations["right"] + populations["b_beyond"] - 1.0
            ),
            transmission_a=populations["right"],
            reflection_a=populations["left"],
            transfer_ba=populations["b_beyond"],
        )
    else:
        transfer = populations["left"] + populations["right"]
        coefficients = CoefficientSet(
            port=query.port,
            conservation_residual=abs(populations["b_beyond"] + transfer - 1.0),
            reflection_b=populations["b_beyond"],
            transfer_ab=transfer,
        )
    return LatticeSolution(
        mode=OracleMode.WAVEPACKET,
        port=query.port,
        layout=layout,
        state=state,
        coefficients=coefficients,
        residuals={"norm_drift": drift},
        populations=populations,
        elapsed_time=elapsed,
        spectrum=spectrum,
    )


@dataclass(frozen=True)
class DiscrepancyReport:
    """Per-coefficient absolute differences between two evaluations.

    For wavepacket runs ``bandwidth_shift`` holds the closed-form average
    over the packet spectrum minus its value at the query wavenumber; the
    differences are taken after that shift is applied.
    """

    mode: OracleMode
    port: Port
    tolerance: float
    differences: dict[str, float]
    failures: tuple[str, ...]
    bandwidth_shift: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def worst(self) -> float:
        return max(self.differences.values(), default=0.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "port": self.port.value,
            "tolerance": self.tolerance,
            "differences": dict(self.differences),
            "bandwidth_shift": dict(self.bandwidth_shift),
            "failures": list(self.failures),
            "passed": self.passed,
        }


def _bandwidth_shift(
    params: RouterParams, kin: Kinematics, port: Port, spectrum: tuple[np.ndarray, np.ndarray]
) -> dict[str, float]:
    ks, weights = spectrum
    if port is Port.FROM_A:
        k_a = ks
    else:
        energy = dispersion_energy(params.omega_c, params.omega_b, params.xi_b, ks)
        k_a, _ = band_wavenumber(energy, params.omega_c, params.omega_a, params.xi_a)
    columns = evaluate_columns(
        {**params.model_dump(), "k_a": np.concatenate([[kin.k_a], k_a])}, port
    )
    if not np.all(columns["propagating"]):
        raise ParameterError(
            "wavepacket: packet spectrum leaves the propagating band of a channel",
            field="wavepacket",
        )
    names = ("T_a", "R_a", "T_ba") if port is Port.FROM_A else ("R_b", "T_ab")
    return {
        name: float(np.dot(weights, columns[name][1:]) - columns[name][0]) for name in names
    }


def compare(
    params: RouterParams,
    kin: Kinematics,
    closed: CoefficientSet,
    oracle: LatticeSolution,
) -> DiscrepancyReport:
    """Check closed-form coefficients against an oracle run of the same query.

    A wavepacket measures the coefficients averaged over its spectrum, so the
    closed form is shifted by its own spectral average before comparing.
    """

    if closed.port is not oracle.port:
        raise ParameterError("port: closed form and oracle evaluated different ports", field="port")
    tolerance = TOLERANCES[oracle.mode]
    shift: dict[str, float] = {}
    if oracle.spectrum is not None:
        shift = _bandwidth_shift(params, kin, oracle.port, oracle.spectrum)
    measured = oracle.coefficients.canonical()
    differences = {
        name: abs(value + shift.get(name, 0.0) - measured[name])
        for name, value in closed.canonical().items()
    }
    failures = tuple(name for name, difference in differences.items() if not difference <= tolerance)
    if failures:
        logger.warning("Oracle mismatch on %s (tolerance %.1e): %s", failures, tolerance, differences)
    return DiscrepancyReport(oracle.mode, oracle.port, tolerance, differences, failures, shift)


def dump_solution(solution: LatticeSolution, path: Path) -> Path:
    """Write the solution vector and region populations as JSON."""

    return write_json(solution.to_dict(), path)
