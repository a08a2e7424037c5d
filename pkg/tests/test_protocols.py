"""Protocol assembly, ideal comparators, and channel tomography.

The tomography check is the load-bearing one: a Lindblad channel is linear,
so the map reconstructed from the 16 basis operators must reproduce direct
propagation of an arbitrary input state to integrator precision.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geomgate.metrics import average_gate_fidelity, channel_deficits
from geomgate.model import (
    AtomPairModel,
    DissipationRates,
    DopplerModel,
    TwoPhotonLadder,
)
from geomgate.propagate import propagate_density
from geomgate.protocols import (
    LADDER_PHASE_PER_STEP,
    NAMED_GATES,
    GateSpec,
    QuantumChannel,
    ScenarioConfig,
    blockade_ideal_unitary,
    build_protocol,
    channel_tomography,
    computational_basis_operators,
    execute_plan,
    ideal_two_qubit_unitary,
    run_blockade_baseline,
    run_dark_state_baseline,
)
from geomgate.pulses import TWO_PI

OMEGA = TWO_PI * 8.0
HAD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


def closed_cz_cfg(steps: int = 4000) -> ScenarioConfig:
    return ScenarioConfig(
        gate=GateSpec.from_name("CZ"),
        rates=DissipationRates.zero(),
        steps_per_protocol_step=steps,
    )


@pytest.fixture(scope="module")
def closed_cz():
    """One full closed-system CZ tomography, shared across the module."""
    plan = build_protocol(closed_cz_cfg())
    channel, diag = channel_tomography(plan)
    return plan, channel, diag


# ---------------------------------------------------------------------------
# ideal comparators


def test_named_gate_angles_are_pinned():
    assert NAMED_GATES["CZ"] == (0.0, 0.0)
    assert NAMED_GATES["CNOT"] == (0.0, -0.5 * math.pi)
    assert NAMED_GATES["CHadamard"] == (0.0, -0.25 * math.pi)


def test_gate_spec_from_name():
    g = GateSpec.from_name("CNOT")
    assert g.name == "CNOT"
    assert g.theta == -0.5 * math.pi
    assert g.phi == 0.0


def test_gate_spec_rejects_unknown_name():
    with pytest.raises(ValueError, match="unknown gate"):
        GateSpec.from_name("Toffoli")


def test_gate_spec_custom():
    g = GateSpec.custom(0.3, -0.1)
    assert g.name == "custom"
    assert (g.theta, g.phi) == (0.3, -0.1)


def test_ideal_cz_is_control_zero_conditioned_z():
    u = ideal_two_qubit_unitary(GateSpec.from_name("CZ"))
    assert np.allclose(u, np.diag([1.0, -1.0, 1.0, 1.0]))


def test_ideal_cnot_target_block_is_pauli_x():
    u = ideal_two_qubit_unitary(GateSpec.from_name("CNOT"))
    assert np.allclose(u[:2, :2], np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(u[2:, 2:], np.eye(2))
    assert np.allclose(u[:2, 2:], 0.0)


def test_ideal_chadamard_target_block_is_hadamard():
    u = ideal_two_qubit_unitary(GateSpec.from_name("CHadamard"))
    assert np.allclose(u[:2, :2], HAD, atol=1e-15)
    assert np.allclose(u[2:, 2:], np.eye(2))


@settings(max_examples=40, deadline=None)
@given(
    theta=st.floats(-math.pi, math.pi, allow_nan=False),
    phi=st.floats(-math.pi, math.pi, allow_nan=False),
)
def test_ideal_unitary_is_unitary(theta, phi):
    u = ideal_two_qubit_unitary(GateSpec.custom(theta, phi))
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)


def test_blockade_ideal_unitary():
    assert np.allclose(blockade_ideal_unitary(), np.diag([1.0, -1.0, -1.0, -1.0]))


# ---------------------------------------------------------------------------
# configuration validation


def _ladder_model() -> AtomPairModel:
    ladder = TwoPhotonLadder(TWO_PI * 245.0, TWO_PI * 80.0, TWO_PI * 1225.0)
    return AtomPairModel.from_geometry(TWO_PI * 64.4e3, 6.0, ladder=ladder)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"scheme": "adiabatic"}, "scheme must be one of"),
        ({"excitation": "half"}, "excitation must be one of"),
        ({"omega_max": 0.0}, "omega_max must be positive"),
        ({"xi": -1.5}, "unphysical"),
        ({"epsilon": -2.0}, "unphysical"),
        ({"steps_per_protocol_step": 50}, "at least 100"),
        ({"scheme": "blockade", "gate": GateSpec.from_name("CNOT")}, "CZ-type"),
        ({"excitation": "full"}, "ladder parameters"),
    ],
)
def test_scenario_config_validation(kwargs, message):
    base = {"gate": GateSpec.from_name("CZ")}
    base.update(kwargs)
    with pytest.raises(ValueError, match=message):
        ScenarioConfig(**base)


def test_full_excitation_rejects_doppler():
    with pytest.raises(ValueError, match="effective drive"):
        ScenarioConfig(
            gate=GateSpec.from_name("CZ"),
            model=_ladder_model(),
            excitation="full",
            doppler=DopplerModel(temperature_uK=10.0),
        )


def test_effective_model_scales_interaction():
    cfg = ScenarioConfig(gate=GateSpec.from_name("CZ"), rri_fluctuation=0.05)
    assert cfg.effective_model().V == pytest.approx(1.05 * cfg.model.V, rel=1e-12)
    clean = ScenarioConfig(gate=GateSpec.from_name("CZ"))
    assert clean.effective_model() is clean.model


# ---------------------------------------------------------------------------
# plan assembly


def test_cz_plan_structure(closed_cz):
    plan, _, _ = closed_cz
    assert len(plan.steps) == 3
    durations = [s.duration for s in plan.steps]
    assert durations[0] == pytest.approx(3.0 * math.pi / OMEGA, rel=1e-12)
    assert durations[1] == pytest.approx(12.0 * math.pi / OMEGA, rel=1e-12)
    assert durations[2] == pytest.approx(durations[0], rel=1e-12)
    assert plan.total_duration == pytest.approx(18.0 * math.pi / OMEGA, rel=1e-12)
    assert plan.space.dim == 16
    assert all(s.n_steps == 4000 for s in plan.steps)
    assert all(len(s.channels) == 12 for s in plan.steps)
    assert np.allclose(plan.ideal, np.diag([1.0, -1.0, 1.0, 1.0]))


def test_cnot_target_duration_shrinks_with_rotation_angle():
    plan = build_protocol(ScenarioConfig(gate=GateSpec.from_name("CNOT")))
    expected = 12.0 * math.pi * math.cos(0.25 * math.pi) / OMEGA
    assert plan.steps[1].duration == pytest.approx(expected, rel=1e-12)


def test_blockade_plan_shapes():
    cfg = ScenarioConfig(gate=GateSpec.from_name("CZ"), scheme="blockade")
    plan = build_protocol(cfg)
    assert plan.target.leg0 is None
    assert np.allclose(plan.ideal, blockade_ideal_unitary())
    durations = [s.duration for s in plan.steps]
    assert durations[0] == pytest.approx(math.pi / OMEGA, rel=1e-12)
    assert durations[1] == pytest.approx(2.0 * math.pi / OMEGA, rel=1e-12)
    assert durations[2] == pytest.approx(math.pi / OMEGA, rel=1e-12)


def test_full_excitation_step_counts_and_channels():
    cfg = ScenarioConfig(
        gate=GateSpec.from_name("CZ"), model=_ladder_model(), excitation="full"
    )
    plan = build_protocol(cfg)
    delta = cfg.model.ladder.delta
    for step in plan.steps:
        expected = max(4000, math.ceil(step.duration * delta / LADDER_PHASE_PER_STEP))
        assert step.n_steps == expected
        assert step.n_steps > 4000  # the detuning, not the base count, binds here
        assert len(step.channels) == 12 + 6
    assert plan.space.dim == 30


def test_rabi_errors_scale_schedule_amplitudes():
    cfg = ScenarioConfig(gate=GateSpec.from_name("CZ"), xi=0.1, epsilon=-0.2)
    plan = build_protocol(cfg)
    clean = build_protocol(ScenarioConfig(gate=GateSpec.from_name("CZ")))
    t_c = 0.5 * plan.control.segments[0].t1
    assert plan.control.amplitude(t_c) == pytest.approx(
        1.1 * clean.control.amplitude(t_c), rel=1e-12
    )
    t_t = 0.5 * plan.target.bright.duration
    assert plan.target.bright.amplitude(t_t) == pytest.approx(
        0.8 * clean.target.bright.amplitude(t_t), rel=1e-12
    )


# ---------------------------------------------------------------------------
# execution and tomography


def test_step_three_inverts_step_one():
    # tolerance budgets for RK4 stages straddling the composite's phase jumps
    plan = build_protocol(closed_cz_cfg(steps=800))
    ops = computational_basis_operators(plan.space)
    y = ops
    for step in (plan.steps[0], plan.steps[2]):
        y = propagate_density(
            step.hamiltonian, y, [], step.duration, step.n_steps,
            hermitize=False, check_positivity=False,
        ).final
    assert np.allclose(y, ops, atol=1e-4)


def test_tomography_matches_direct_propagation(closed_cz):
    plan, channel, _ = closed_cz
    rng = np.random.default_rng(7)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho4 = a @ a.conj().T
    rho4 /= np.trace(rho4)
    idx = plan.space.computational_indices()
    rho_full = np.zeros((plan.space.dim, plan.space.dim), dtype=complex)
    rho_full[np.ix_(idx, idx)] = rho4
    final, _ = execute_plan(plan, rho_full, hermitize=True)
    direct = final[np.ix_(idx, idx)]
    assert np.allclose(channel.apply(rho4), direct, atol=1e-9)


def test_closed_channel_preserves_basis_traces(closed_cz):
    _, channel, _ = closed_cz
    assert np.allclose(channel.basis_state_traces(), 1.0, atol=1e-5)
    worst, mean = channel_deficits(channel)
    assert worst < 1e-5
    assert mean <= worst


def test_closed_channel_matches_ideal(closed_cz):
    plan, channel, _ = closed_cz
    assert average_gate_fidelity(channel, plan.ideal) > 0.999


def test_run_diagnostics_fields(closed_cz):
    plan, _, diag = closed_cz
    assert diag.total_duration == pytest.approx(plan.total_duration, rel=1e-12)
    assert np.array_equal(diag.ideal, plan.ideal)
    # the trace is conserved by the algebra; drift here is pure roundoff
    assert diag.max_trace_drift < 1e-9


def test_execute_plan_stores_snapshots():
    plan = build_protocol(closed_cz_cfg(steps=100))
    ops = computational_basis_operators(plan.space)[:1]
    _, results = execute_plan(plan, ops, store_every=25)
    assert len(results) == 3
    assert len(results[0].times) == 5
    assert results[0].times[0] == 0.0
    assert results[0].times[-1] == pytest.approx(plan.steps[0].duration)


# ---------------------------------------------------------------------------
# the channel container itself


def test_channel_rejects_wrong_image_shape():
    with pytest.raises(ValueError, match=r"\(4, 4, 4, 4\)"):
        QuantumChannel(np.zeros((4, 4, 4, 3)))


def test_channel_rejects_wrong_input_shape():
    chan = QuantumChannel(np.zeros((4, 4, 4, 4)))
    with pytest.raises(ValueError, match="4x4"):
        chan.apply(np.zeros((3, 3)))


def test_identity_channel_acts_trivially():
    images = np.zeros((4, 4, 4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            images[i, j, i, j] = 1.0
    chan = QuantumChannel(images)
    rng = np.random.default_rng(3)
    rho = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.allclose(chan.apply(rho), rho)
    assert np.allclose(chan.basis_state_traces(), 1.0)


def test_channel_apply_is_linear():
    rng = np.random.default_rng(11)
    chan = QuantumChannel(rng.normal(size=(4, 4, 4, 4)) + 1j * rng.normal(size=(4, 4, 4, 4)))
    r1 = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    r2 = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    lhs = chan.apply(0.3 * r1 - 1.7j * r2)
    rhs = 0.3 * chan.apply(r1) - 1.7j * chan.apply(r2)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_computational_basis_operators_layout(closed_cz):
    plan, _, _ = closed_cz
    ops = computational_basis_operators(plan.space)
    idx = plan.space.computational_indices()
    assert ops.shape == (16, 16, 16)
    for i in range(4):
        for j in range(4):
            op = ops[4 * i + j]
            assert op[idx[i], idx[j]] == 1.0
            assert np.count_nonzero(op) == 1


# ---------------------------------------------------------------------------
# scheme helpers


def test_blockade_helper_forces_scheme():
    cfg = ScenarioConfig(
        gate=GateSpec.from_name("CZ"),
        rates=DissipationRates.zero(),
        steps_per_protocol_step=300,
    )
    channel, diag = run_blockade_baseline(cfg)
    assert np.allclose(diag.ideal, blockade_ideal_unitary())
    assert np.all(np.isfinite(channel.images))


def test_dark_state_helper_runs_clean_cz():
    # modest V keeps the exchange splitting resolved at this step count
    cfg = ScenarioConfig(
        gate=GateSpec.from_name("CZ"),
        model=AtomPairModel(V=TWO_PI * 50.0),
        rates=DissipationRates.zero(),
        steps_per_protocol_step=300,
    )
    channel, diag = run_dark_state_baseline(cfg)
    assert np.allclose(diag.ideal, np.diag([1.0, -1.0, 1.0, 1.0]))
    assert np.allclose(channel.basis_state_traces(), 1.0, atol=1e-6)
