"""Tests for the closed-form junction amplitudes and coefficients."""

from __future__ import annotations

import math

import numpy as np
import pytest

hypothesis = pytest.importorskip("hypothesis")
from hypothesis import assume, given, settings  # noqa: E402
from hypothesis import strategies as st  # noqa: E402

from tbulge.core import (  # noqa: E402
    FIGURE_BASE,
    Kinematics,
    ParameterError,
    RouterParams,
    dispersion_energy,
    kinematics_from_energy,
    kinematics_from_k,
)
from tbulge.scattering import (  # noqa: E402
    DegenerateChannelError,
    Port,
    ScatteringQuery,
    amplitudes_from_a,
    amplitudes_from_b,
    coefficients,
    equation_residual,
    evaluate_columns,
    printed_transmission,
    published_amplitudes,
    scatter,
    wavefunction,
)

PORTS = (Port.FROM_A, Port.FROM_B)


@st.composite
def scattering_points(draw, *, min_coupling: float = 0.0):
    """Random propagating parameter tuples; ω_b is chosen so channel b sits at a drawn k_b."""

    coupling = st.floats(min_value=min_coupling, max_value=8.0)
    xi_a = draw(st.floats(min_value=0.5, max_value=2.0))
    xi_b = draw(st.floats(min_value=0.5, max_value=2.0))
    omega_a = draw(st.floats(min_value=0.0, max_value=5.0))
    omega_c = draw(st.floats(min_value=0.0, max_value=5.0))
    k_a = draw(st.floats(min_value=0.1, max_value=math.pi - 0.1))
    k_b = draw(st.floats(min_value=0.1, max_value=math.pi - 0.1))
    energy = omega_c + omega_a - 2.0 * xi_a * math.cos(k_a)
    params = RouterParams(
        omega_a=omega_a,
        omega_b=energy - omega_c + 2.0 * xi_b * math.cos(k_b),
        omega_c=omega_c,
        omega_e=draw(st.floats(min_value=0.0, max_value=10.0)),
        omega_f=draw(st.floats(min_value=0.0, max_value=5.0)),
        xi_a=xi_a,
        xi_b=xi_b,
        g_a=draw(coupling),
        g_b=draw(coupling),
        g_c=draw(coupling),
        n_junction=draw(st.integers(min_value=1, max_value=8)),
    )
    return params, kinematics_from_k(params, k_a)


@settings(max_examples=300, deadline=None)
@given(point=scattering_points())
def test_coefficients_conserve_probability_for_both_ports(point) -> None:
    params, kin = point
    for port in PORTS:
        _, coeffs = scatter(params, ScatteringQuery(port, kin))

        assert coeffs.conservation_residual < 1e-12
        assert all(-1e-12 <= value <= 1.0 + 1e-12 for value in coeffs.canonical().values())


@settings(max_examples=200, deadline=None)
@given(point=scattering_points())
def test_amplitudes_satisfy_discrete_equations(point) -> None:
    params, kin = point
    for port in PORTS:
        amps, _ = scatter(params, ScatteringQuery(port, kin))

        assert equation_residual(params, kin, amps) < 1e-12


@settings(max_examples=200, deadline=None)
@given(point=scattering_points(min_coupling=0.05))
def test_published_forms_agree_with_junction_solve(point) -> None:
    params, kin = point
    assume(abs(kin.delta_e) > 1e-3)

    from_a = amplitudes_from_a(params, kin)
    from_b = amplitudes_from_b(params, kin)
    expected_a = published_amplitudes(params, kin, Port.FROM_A)
    expected_b = published_amplitudes(params, kin, Port.FROM_B)

    pairs = [(getattr(from_a, name), expected_a[name]) for name in ("t", "r", "t_b")]
    pairs += [(getattr(from_b, name), expected_b[name]) for name in ("r_b", "t_a")]
    for solved, published in pairs:
        assert abs(solved) == pytest.approx(abs(published), rel=1e-11, abs=1e-13)
        assert solved == pytest.approx(published, rel=1e-10, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(point=scattering_points())
def test_transfer_from_a_never_exceeds_one_half(point) -> None:
    params, kin = point
    _, coeffs = scatter(params, ScatteringQuery(Port.FROM_A, kin))

    assert coeffs.transfer_ba <= 0.5 + 1e-9


def test_unit_example_without_upper_coupling(unit_params) -> None:
    kin = kinematics_from_k(unit_params, math.pi / 2.0)

    from_a = amplitudes_from_a(unit_params, kin)
    from_b = amplitudes_from_b(unit_params, kin)

    assert from_a.t_b == pytest.approx(2j / 3.0, abs=1e-12)
    assert from_a.r == pytest.approx(-1.0 / 3.0, abs=1e-12)
    assert from_a.t == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert from_a.u_e == 0
    assert from_b.t_a == pytest.approx(2j / 3.0, abs=1e-12)
    assert from_b.r_b == pytest.approx(1.0 / 3.0, abs=1e-12)

    coeffs = coefficients(unit_params, kin, from_a)
    assert coeffs.transmission_a == pytest.approx(4.0 / 9.0, abs=1e-12)
    assert coeffs.reflection_a == pytest.approx(1.0 / 9.0, abs=1e-12)
    assert coeffs.transfer_ba == pytest.approx(4.0 / 9.0, abs=1e-12)


def test_unit_example_with_upper_coupling(unit_params) -> None:
    params = unit_params.model_copy(update={"g_c": 1.0})
    kin = kinematics_from_k(params, math.pi / 2.0)

    _, coeffs = scatter(params, ScatteringQuery(Port.FROM_A, kin))

    assert coeffs.transfer_ba == pytest.approx(36.0 / 85.0, abs=1e-12)
    assert coeffs.transmission_a == pytest.approx(40.0 / 85.0, abs=1e-12)
    assert coeffs.reflection_a == pytest.approx(9.0 / 85.0, abs=1e-12)


def test_golden_point_splits_and_routes_completely(golden_params) -> None:
    kin = kinematics_from_k(golden_params, math.pi / 4.0)

    _, from_a = scatter(golden_params, ScatteringQuery(Port.FROM_A, kin))
    amps_b, from_b = scatter(golden_params, ScatteringQuery(Port.FROM_B, kin))

    assert from_a.transmission_a == pytest.approx(0.25, abs=1e-10)
    assert from_a.reflection_a == pytest.approx(0.25, abs=1e-10)
    assert from_a.transfer_ba == pytest.approx(0.5, abs=1e-10)
    assert from_b.reflection_b == pytest.approx(0.0, abs=1e-10)
    assert from_b.transfer_ab == pytest.approx(1.0, abs=1e-10)
    assert abs(amps_b.r_b) < 1e-6


def test_printed_transmission_differs_only_in_phase_for_equal_velocities(golden_params) -> None:
    kin = kinematics_from_k(golden_params, 1.2)

    rederived = published_amplitudes(golden_params, kin, Port.FROM_A)["t"]
    printed = printed_transmission(golden_params, kin)

    assert abs(printed) == pytest.approx(abs(rederived), rel=1e-12)
    assert printed == pytest.approx(-rederived, rel=1e-12)


def test_printed_transmission_modulus_differs_for_unequal_velocities(golden_params) -> None:
    params = golden_params.model_copy(update={"xi_b": 3.0})
    kin = kinematics_from_k(params, 1.2)

    rederived = amplitudes_from_a(params, kin).t

    assert abs(printed_transmission(params, kin)) != pytest.approx(abs(rederived), rel=1e-6)


@pytest.mark.parametrize("n_junction", range(2, 9))
def test_node_blocking_closes_the_transfer_channel(golden_params, n_junction) -> None:
    params = golden_params.model_copy(update={"n_junction": n_junction})
    for mode in range(1, n_junction):
        kin = kinematics_from_k(params, mode * math.pi / n_junction)

        _, from_a = scatter(params, ScatteringQuery(Port.FROM_A, kin))
        amps_b, _ = scatter(params, ScatteringQuery(Port.FROM_B, kin))

        assert from_a.transfer_ba < 1e-24
        assert abs(amps_b.r_b) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_decoupled_waveguide_a_is_fully_transmitting(golden_params) -> None:
    params = golden_params.model_copy(update={"g_a": 0.0})
    kin = kinematics_from_k(params, 0.9)

    _, from_a = scatter(params, ScatteringQuery(Port.FROM_A, kin))
    _, from_b = scatter(params, ScatteringQuery(Port.FROM_B, kin))

    assert from_a.transmission_a == pytest.approx(1.0, abs=1e-14)
    assert from_a.transfer_ba == pytest.approx(0.0, abs=1e-14)
    assert from_b.reflection_b == pytest.approx(1.0, abs=1e-12)


def test_decoupled_waveguide_b_receives_nothing(golden_params) -> None:
    params = golden_params.model_copy(update={"g_b": 0.0})
    kin = kinematics_from_k(params, 0.9)

    _, coeffs = scatter(params, ScatteringQuery(Port.FROM_A, kin))

    assert coeffs.transfer_ba == pytest.approx(0.0, abs=1e-14)
    assert coeffs.conservation_residual < 1e-12


def test_upper_level_on_resonance_makes_junction_transparent(golden_params) -> None:
    k_a = math.pi / 4.0
    energy = float(
        dispersion_energy(golden_params.omega_c, golden_params.omega_a, golden_params.xi_a, k_a)
    )
    params = golden_params.model_copy(update={"omega_e": energy})
    kin = kinematics_from_k(params, k_a)
    assert kin.delta_e == 0.0

    amps, coeffs = scatter(params, ScatteringQuery(Port.FROM_A, kin))

    assert amps.u_f == pytest.approx(0.0, abs=1e-14)
    assert coeffs.transmission_a == pytest.approx(1.0, abs=1e-12)


def test_transmission_rises_to_one_as_upper_level_approaches_resonance(golden_params) -> None:
    energy = float(kinematics_from_k(golden_params, math.pi / 4.0).energy)
    transmissions = []
    for exponent in range(2, 9):
        params = golden_params.model_copy(update={"omega_e": energy - 10.0**-exponent})
        kin = kinematics_from_energy(params, energy)
        assert kin.delta_e == pytest.approx(10.0**-exponent, rel=1e-6)

        _, coeffs = scatter(params, ScatteringQuery(Port.FROM_A, kin))
        transmissions.append(coeffs.transmission_a)

    assert all(later >= earlier for earlier, later in zip(transmissions, transmissions[1:]))
    assert transmissions[0] < transmissions[3]
    assert transmissions[-1] == pytest.approx(1.0, abs=1e-10)


def test_weak_coupling_to_b_reflects_everything_back_into_b(golden_params) -> None:
    kin = kinematics_from_k(golden_params, 0.9)
    moduli = []
    for g_b in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        params = golden_params.model_copy(update={"g_b": g_b})

        amps, coeffs = scatter(params, ScatteringQuery(Port.FROM_B, kin))
        moduli.append(abs(amps.r_b))
        assert coeffs.conservation_residual < 1e-12

    assert all(later >= earlier for earlier, later in zip(moduli, moduli[1:]))
    assert moduli[-1] == pytest.approx(1.0, abs=1e-10)


def test_dressed_resonance_stays_finite_and_conserving() -> None:
    params = RouterParams(
        omega_a=0.0,
        omega_b=0.0,
        omega_c=0.0,
        omega_e=1.0,
        omega_f=1.0,
        xi_a=1.0,
        xi_b=1.0,
        g_a=1.0,
        g_b=1.0,
        g_c=1.0,
        n_junction=1,
    )
    kin = kinematics_from_energy(params, 0.0)

    for port in PORTS:
        amps, coeffs = scatter(params, ScatteringQuery(port, kin))

        assert np.isfinite(amps.u_f)
        assert coeffs.conservation_residual < 1e-12


def test_transfer_weighting_uses_group_velocity_ratio(golden_params) -> None:
    params = golden_params.model_copy(update={"xi_b": 3.0, "omega_b": golden_params.omega_b + 1.0})
    kin = kinematics_from_k(params, 1.0)

    _, from_a = scatter(params, ScatteringQuery(Port.FROM_A, kin))
    _, from_b = scatter(params, ScatteringQuery(Port.FROM_B, kin))

    assert from_a.transfer_ba == pytest.approx(kin.v_b / kin.v_a * from_a.transfer_ba_unweighted)
    assert from_b.transfer_ab == pytest.approx(kin.v_a / kin.v_b * from_b.transfer_ab_unweighted)
    assert from_a.conservation_residual < 1e-12
    assert from_b.conservation_residual < 1e-12


def test_large_couplings_suppress_reflection_into_b(golden_params) -> None:
    params = golden_params.model_copy(update={"g_a": 8.0, "g_b": 8.0, "g_c": 8.0})
    kin = kinematics_from_k(params, math.pi / 4.0)

    _, coeffs = scatter(params, ScatteringQuery(Port.FROM_B, kin))

    assert coeffs.reflection_b < 0.05


@pytest.mark.parametrize("g_c", [0.5, 1.0, 2.0, 6.0, 8.0])
def test_weak_waveguide_couplings_reflect_into_b(golden_params, g_c) -> None:
    params = golden_params.model_copy(update={"g_a": 0.2, "g_b": 0.2, "g_c": g_c})
    kin = kinematics_from_k(params, math.pi / 4.0)

    _, coeffs = scatter(params, ScatteringQuery(Port.FROM_B, kin))

    assert coeffs.reflection_b > 0.9


def test_wavefunction_follows_piecewise_ansatz(golden_params) -> None:
    kin = kinematics_from_k(golden_params, 0.7)
    amps = amplitudes_from_a(golden_params, kin)

    assert wavefunction(golden_params, kin, amps, ("a", 4)) == pytest.approx(amps.t * np.exp(4j * kin.k_a))
    assert wavefunction(golden_params, kin, amps, ("b", 2)) == pytest.approx(
        amps.standing_a * math.sin(2 * kin.k_b)
    )
    assert wavefunction(golden_params, kin, amps, ("b", 7)) == pytest.approx(
        amps.t_b * np.exp(7j * kin.k_b)
    )


@pytest.mark.parametrize("site", [("b", 0), ("b", -3), ("c", 1)])
def test_wavefunction_rejects_invalid_sites(golden_params, site) -> None:
    kin = kinematics_from_k(golden_params, 0.7)
    amps = amplitudes_from_a(golden_params, kin)

    with pytest.raises(ParameterError):
        wavefunction(golden_params, kin, amps, site)


def test_published_forms_require_nonzero_couplings(golden_params) -> None:
    params = golden_params.model_copy(update={"g_b": 0.0})
    kin = kinematics_from_k(params, 0.7)

    with pytest.raises(ParameterError, match="g_b"):
        published_amplitudes(params, kin, Port.FROM_A)


def test_band_edge_kinematics_are_degenerate(golden_params) -> None:
    kin = Kinematics(energy=0.0, k_a=0.5, k_b=0.0, v_a=1.0, v_b=0.0, delta_e=-1.0)

    with pytest.raises(DegenerateChannelError, match="degenerate channel"):
        scatter(golden_params, ScatteringQuery(Port.FROM_A, kin))


def test_amplitude_serialization_uses_real_imaginary_pairs(unit_params) -> None:
    kin = kinematics_from_k(unit_params, math.pi / 2.0)

    payload = amplitudes_from_a(unit_params, kin).to_dict()

    assert payload["port"] == "a"
    assert payload["t_b"][0] == pytest.approx(0.0, abs=1e-12)
    assert payload["t_b"][1] == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert "r_b" not in payload


def test_vectorized_conservation_over_ten_thousand_tuples() -> None:
    rng = np.random.default_rng(7)
    size = 10_000
    xi_a = rng.uniform(0.5, 2.0, size)
    xi_b = rng.uniform(0.5, 2.0, size)
    omega_a = rng.uniform(0.0, 5.0, size)
    omega_c = rng.uniform(0.0, 5.0, size)
    k_a = rng.uniform(0.1, math.pi - 0.1, size)
    k_b = rng.uniform(0.1, math.pi - 0.1, size)
    energy = omega_c + omega_a - 2.0 * xi_a * np.cos(k_a)
    columns = {
        "omega_a": omega_a,
        "omega_b": energy - omega_c + 2.0 * xi_b * np.cos(k_b),
        "omega_c": omega_c,
        "omega_e": rng.uniform(0.0, 10.0, size),
        "omega_f": rng.uniform(0.0, 5.0, size),
        "xi_a": xi_a,
        "xi_b": xi_b,
        "g_a": rng.uniform(0.0, 8.0, size),
        "g_b": rng.uniform(0.0, 8.0, size),
        "g_c": rng.uniform(0.0, 8.0, size),
        "n_junction": rng.integers(1, 9, size),
        "k_a": k_a,
    }

    for port in PORTS:
        result = evaluate_columns(columns, port)

        assert result["propagating"].all()
        assert np.max(result["residual"]) < 1e-12


def test_vectorized_evaluation_matches_point_evaluation(golden_params) -> None:
    columns = {**golden_params.model_dump(), "g_c": np.array([0.5, 3.0, 7.5]), "k_a": 1.1}
    result = evaluate_columns(columns, Port.FROM_B)

    for index, g_c in enumerate((0.5, 3.0, 7.5)):
        params = golden_params.model_copy(update={"g_c": g_c})
        amps, coeffs = scatter(params, ScatteringQuery(Port.FROM_B, kinematics_from_k(params, 1.1)))

        assert result["r_b"][index] == pytest.approx(amps.r_b, abs=1e-13)
        assert result["T_ab"][index] == pytest.approx(coeffs.transfer_ab, abs=1e-13)


def test_vectorized_evaluation_marks_evanescent_points() -> None:
    columns = {**FIGURE_BASE.model_dump(), "omega_b": np.array([FIGURE_BASE.omega_b, 40.0]), "k_a": 1.0}

    result = evaluate_columns(columns, Port.FROM_A)

    assert result["propagating"].tolist() == [True, False]
    assert math.isnan(result["T_ba"][1])
    assert np.isfinite(result["T_ba"][0])
