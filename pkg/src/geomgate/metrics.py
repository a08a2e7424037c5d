"""Gate quality measures: average fidelity, populations, leakage, excitation error.

The average gate fidelity of a channel Xi against a target unitary U is

    F = [ sum_j tr(U U_j^dag U^dag Xi(U_j)) + d^2 ] / [ d^2 (d + 1) ],

with the sum running over the d^2 = 16 two-qubit Pauli tensor products.
For the identity channel this gives 1; for the completely depolarizing
channel only the identity term survives and F = (d + d^2)/(d^2 (d+1)) = 1/4
at d = 4, an analytic anchor pinned in the tests.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .model import AtomPairModel
from .propagate import propagate_state
from .protocols import (
    ProtocolPlan,
    QuantumChannel,
    ScenarioConfig,
    build_protocol,
    channel_tomography,
    execute_plan,
    run_channel,
)
from .qcore import HilbertSpace, is_unitary, project_to_computational

_PAULI_1 = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def pauli_basis_two_qubit() -> np.ndarray:
    """The 16 Pauli tensor products, identity first, shape (16, 4, 4)."""
    return np.array([np.kron(a, b) for a in _PAULI_1 for b in _PAULI_1])


def average_gate_fidelity(channel: QuantumChannel, target: np.ndarray) -> float:
    """Average fidelity of the measured channel against a target unitary."""
    target = np.asarray(target, dtype=complex)
    if target.shape != (4, 4):
        raise ValueError("target must be a two-qubit unitary")
    if not is_unitary(target, 1e-10):
        raise ValueError("target operator is not unitary")
    d = 4
    total = 0.0
    for u_j in pauli_basis_two_qubit():
        image = channel.apply(u_j)
        total += float(np.real(np.trace(target @ u_j.conj().T @ target.conj().T @ image)))
    return (total + d * d) / (d * d * (d + 1))


def depolarizing_channel() -> QuantumChannel:
    """Xi(rho) = tr(rho) I / 4, the analytic anchor for the fidelity formula."""
    images = np.zeros((4, 4, 4, 4), dtype=complex)
    for i in range(4):
        images[i, i] = np.eye(4) / 4.0
    return QuantumChannel(images)


# ---------------------------------------------------------------------------
# population dynamics


@dataclass
class PopulationTrace:
    times: np.ndarray
    populations: np.ndarray  # (n_times, dim) diagonal of rho
    labels: list[str]
    trace: np.ndarray
    final_state_fidelity: float


def population_trace(cfg: ScenarioConfig, store_every: int = 20) -> PopulationTrace:
    """Evolve the uniform superposition and record level populations.

    The initial state is (|00> + |01> + |10> + |11>)/2; the returned state
    fidelity compares the final density matrix against the ideal gate
    output for that input.
    """
    plan = build_protocol(cfg)
    space = plan.space
    idx = space.computational_indices()
    psi = np.zeros(space.dim, dtype=complex)
    psi[idx] = 0.5
    rho0 = np.outer(psi, psi.conj())

    final, results = execute_plan(plan, rho0[None, :, :], hermitize=True, store_every=store_every)
    times, pops, traces = [], [], []
    offset = 0.0
    for step, res in zip(plan.steps, results):
        for t, snap in zip(res.times, res.snapshots):
            times.append(offset + t)
            pops.append(np.real(np.diag(snap[0])))
            traces.append(float(np.real(np.trace(snap[0]))))
        offset += step.duration

    rho4 = project_to_computational(final[0], space)
    psi4_ideal = plan.ideal @ (0.5 * np.ones(4, dtype=complex))
    fid = float(np.real(np.vdot(psi4_ideal, rho4 @ psi4_ideal)))
    return PopulationTrace(
        times=np.array(times),
        populations=np.array(pops),
        labels=space.basis_labels(),
        trace=np.array(traces),
        final_state_fidelity=fid,
    )


def dump_population_csv(trace: PopulationTrace, path: str) -> None:
    """Write (time_us, populations..., trace) rows for external plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_us"] + [f"pop_{lbl}" for lbl in trace.labels] + ["trace"])
        for k, t in enumerate(trace.times):
            row = [f"{t:.9g}"] + [f"{p:.9g}" for p in trace.populations[k]] + [f"{trace.trace[k]:.9g}"]
            writer.writerow(row)


# ---------------------------------------------------------------------------
# leakage during the target pulse


@dataclass
class LeakageReport:
    max_probability: float
    mean_probability: float
    times: np.ndarray
    probability: np.ndarray


def leakage_probability(cfg: ScenarioConfig) -> LeakageReport:
    """Population escaping |Psi'> = |R'1> during the closed-system target pulse.

    The model must carry leakage channels; dissipation and amplitude errors
    are switched off, matching how the leakage bound is quoted.
    """
    if not cfg.model.leakage:
        raise ValueError("model carries no leakage channels")
    from .model import target_step_hamiltonian
    from .pulses import target_schedules

    space = cfg.model.space()
    target = target_schedules(cfg.gate.theta, cfg.gate.phi, cfg.omega_max)
    ham = target_step_hamiltonian(space, list(target), cfg.model)
    psi0 = space.basis_state(("R'", "1"))
    traj = propagate_state(ham, psi0, target.duration, cfg.steps_per_protocol_step, store_every=1)
    overlap = np.abs(traj.states @ psi0.conj()) ** 2
    prob = 1.0 - overlap
    return LeakageReport(
        max_probability=float(np.max(prob)),
        mean_probability=float(np.mean(prob)),
        times=traj.times,
        probability=prob,
    )


# ---------------------------------------------------------------------------
# off-resonant excitation of unwanted Rydberg levels


@dataclass(frozen=True)
class ExcitationChannel:
    """One unwanted Rydberg level: detuning and relative dipole strength."""

    delta: float  # rad/us
    dipole_ratio: float


def excitation_probability_exact(omega: float, delta: float, t: float) -> float:
    """|<R_L|psi(t)>|^2 for a constant off-resonant drive."""
    w = math.sqrt(delta**2 + omega**2)
    return (omega * math.sin(0.5 * w * t) / w) ** 2


def excitation_error(
    channels: Sequence[ExcitationChannel],
    omega: float,
    pulse_multiplicity: int,
) -> dict:
    """Total off-resonant excitation budget for one atom's pulse train.

    Each channel k is driven at omega_k = dipole_ratio * omega; the exact
    single-pulse probability is evaluated at t = pi/omega_k and compared
    with the envelope bound (omega_k / delta_k)^2.  The total multiplies
    the bound sum by the number of pulses the atom sees.
    """
    if not channels:
        import warnings

        warnings.warn("no excitation channels given; total error is zero", stacklevel=2)
    exact, bounds = [], []
    for ch in channels:
        w_k = ch.dipole_ratio * omega
        p = excitation_probability_exact(w_k, ch.delta, math.pi / w_k) if w_k > 0 else 0.0
        b = (w_k / ch.delta) ** 2
        exact.append(p)
        bounds.append(b)
    return {
        "per_channel_exact": exact,
        "per_channel_bound": bounds,
        "total_bound": pulse_multiplicity * float(np.sum(bounds)),
        "total_exact": pulse_multiplicity * float(np.sum(exact)),
    }


# ---------------------------------------------------------------------------
# convergence


def convergence_report(cfg: ScenarioConfig, factor: int = 2) -> dict:
    """Fidelity change under refining the integrator by the given factor."""
    channel, diag = run_channel(cfg)
    fine_cfg = replace(cfg, steps_per_protocol_step=factor * cfg.steps_per_protocol_step)
    channel_fine, _ = run_channel(fine_cfg)
    f0 = average_gate_fidelity(channel, diag.ideal)
    f1 = average_gate_fidelity(channel_fine, diag.ideal)
    return {
        "fidelity": f0,
        "fidelity_refined": f1,
        "delta": abs(f1 - f0),
        "steps": cfg.steps_per_protocol_step,
    }


def channel_deficits(channel: QuantumChannel) -> tuple[float, float]:
    """(max, mean) population lost by the four basis states, i.e. 1 - tr."""
    traces = channel.basis_state_traces()
    deficits = 1.0 - traces
    return float(np.max(deficits)), float(np.mean(deficits))
