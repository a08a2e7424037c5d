"""Fixed-step RK4 propagation of states and open-system density matrices.

The Lindblad right-hand side is evaluated as

    drho = -i (H_eff rho - rho H_eff^dag) + sum_i G_i A_i rho A_i^dag,
    H_eff = H(t) - (i/2) sum_i G_i A_i^dag A_i,

with the jump part applied through a precomputed superoperator acting on
row-major vectorized matrices, so a whole batch of initial operators
(e.g. the 16 tomography inputs) advances through one set of Hamiltonian
samples.  The classic fixed-step fourth-order Runge-Kutta rule needs the
Hamiltonian at t, t + h/2 and t + h; all drive values are sampled on that
half-step grid in one vectorized pass before the loop starts.

Both propagators evolve exactly trace-preserving right-hand sides, so a
growing trace defect signals an integration problem rather than physics;
it is checked and reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from .model import (
    AtomPairModel,
    CollapseChannel,
    StepHamiltonian,
    pair_dark_bright,
    target_step_hamiltonian,
)
from .pulses import PulseSchedule, PulseSegment, Sin2Envelope, TargetSchedules
from .qcore import HilbertSpace, hermiticity_defect

TRACE_DRIFT_TOL = 1e-8
NORM_DRIFT_TOL = 1e-8
POSITIVITY_ABORT = -1e-6
ADIABATIC_RATIO_FLAG = 0.1


class PropagationError(RuntimeError):
    """Integration produced non-finite or unphysical values."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:.6g} us")
        self.t = t


def _as_time_grid(duration: float, steps: int) -> tuple[float, np.ndarray]:
    if steps < 1:
        raise ValueError("need at least one step")
    h = duration / steps
    # half-step grid: index 2n is t_n, 2n+1 is the midpoint
    return h, np.linspace(0.0, duration, 2 * steps + 1)


def _sampler_for(hamiltonian, times: np.ndarray):
    if isinstance(hamiltonian, StepHamiltonian):
        return hamiltonian.sampler(times)
    return _CallableSampler(hamiltonian, times)


class _CallableSampler:
    """Fallback for plain H(t) callables."""

    def __init__(self, fn, times):
        self.fn = fn
        self.times = times

    def at_index(self, j: int) -> np.ndarray:
        return np.asarray(self.fn(float(self.times[j])), dtype=complex)


@dataclass
class StateTrajectory:
    final: np.ndarray
    times: np.ndarray | None = None
    states: np.ndarray | None = None
    norm_drift: float = 0.0


def propagate_state(
    hamiltonian,
    psi0: np.ndarray,
    duration: float,
    steps: int,
    store_every: int = 0,
) -> StateTrajectory:
    """Closed-system Schrodinger propagation of one ket over [0, duration]."""
    psi = np.array(psi0, dtype=complex)
    norm0 = float(np.linalg.norm(psi))
    h, times = _as_time_grid(duration, steps)
    sampler = _sampler_for(hamiltonian, times)

    stored_t, stored = [], []
    if store_every:
        stored_t.append(0.0)
        stored.append(psi.copy())

    worst_drift = 0.0
    check_every = max(1, steps // 128)
    for n in range(steps):
        h1 = sampler.at_index(2 * n)
        k1 = -1j * (h1 @ psi)
        h2 = sampler.at_index(2 * n + 1)
        k2 = -1j * (h2 @ (psi + 0.5 * h * k1))
        k3 = -1j * (h2 @ (psi + 0.5 * h * k2))
        h3 = sampler.at_index(2 * n + 2)
        k4 = -1j * (h3 @ (psi + h * k3))
        psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (n + 1) % check_every == 0 or n + 1 == steps:
            norm = float(np.linalg.norm(psi))
            if not math.isfinite(norm):
                raise PropagationError("state norm became non-finite", (n + 1) * h)
            worst_drift = max(worst_drift, abs(norm - norm0))
        if store_every and ((n + 1) % store_every == 0 or n + 1 == steps):
            stored_t.append((n + 1) * h)
            stored.append(psi.copy())

    if worst_drift > NORM_DRIFT_TOL:
        raise PropagationError(f"norm drifted by {worst_drift:.3e}", duration)
    return StateTrajectory(
        final=psi,
        times=np.array(stored_t) if store_every else None,
        states=np.array(stored) if store_every else None,
        norm_drift=worst_drift,
    )


def jump_superoperator(channels: Sequence[CollapseChannel], dim: int) -> np.ndarray | None:
    """sum_i G_i (A_i kron conj(A_i)) acting on row-major vec(rho)."""
    j = None
    for ch in channels:
        if ch.rate == 0.0:
            continue
        a = np.asarray(ch.operator, dtype=complex)
        term = ch.rate * np.kron(a, a.conj())
        j = term if j is None else j + term
    return j


def damping_operator(channels: Sequence[CollapseChannel], dim: int) -> np.ndarray:
    """M = (1/2) sum_i G_i A_i^dag A_i, the anti-Hermitian part of H_eff."""
    m = np.zeros((dim, dim), dtype=complex)
    for ch in channels:
        if ch.rate == 0.0:
            continue
        a = np.asarray(ch.operator, dtype=complex)
        m += 0.5 * ch.rate * (a.conj().T @ a)
    return m


@dataclass
class DensityTrajectory:
    final: np.ndarray  # same batch shape as the input
    times: np.ndarray | None = None
    snapshots: np.ndarray | None = None
    max_trace_drift: float = 0.0
    max_hermiticity_defect: float = 0.0
    min_eigenvalue: float = 0.0


def propagate_density(
    hamiltonian,
    rho0: np.ndarray,
    channels: Sequence[CollapseChannel],
    duration: float,
    steps: int,
    hermitize: bool = True,
    check_positivity: bool | None = None,
    store_every: int = 0,
) -> DensityTrajectory:
    """Lindblad propagation of one density matrix or a batch of operators.

    rho0 may be (D, D) or (B, D, D).  Symmetrization each step keeps a
    physical density matrix exactly Hermitian; pass hermitize=False when
    propagating non-Hermitian basis operators (process tomography), whose
    evolution is defined by linear extension of the same master equation.
    Positivity is only meaningful for actual density matrices; it is
    checked at stored snapshots and the run aborts below -1e-6.
    """
    y = np.array(rho0, dtype=complex)
    squeeze = y.ndim == 2
    if squeeze:
        y = y[None, :, :]
    batch, dim = y.shape[0], y.shape[-1]
    if check_positivity is None:
        check_positivity = hermitize

    h, times = _as_time_grid(duration, steps)
    sampler = _sampler_for(hamiltonian, times)
    m = damping_operator(channels, dim)
    dissipative = bool(np.any(np.abs(m) > 0.0))
    jump_t = jump_superoperator(channels, dim)
    if jump_t is not None:
        jump_t = jump_t.T.copy()

    trace0 = np.einsum("bii->b", y).copy()
    trace_scale = np.maximum(1.0, np.abs(trace0))

    def rhs(h_bare: np.ndarray, y_in: np.ndarray) -> np.ndarray:
        if dissipative:
            h_eff = h_bare - 1j * m
            dy = -1j * (h_eff @ y_in - y_in @ h_eff.conj().T)
            dy += (y_in.reshape(batch, dim * dim) @ jump_t).reshape(batch, dim, dim)
        else:
            dy = -1j * (h_bare @ y_in - y_in @ h_bare)
        return dy

    stored_t, stored = [], []
    if store_every:
        stored_t.append(0.0)
        stored.append(y.copy())

    max_drift = 0.0
    max_defect = 0.0
    min_eig = np.inf
    check_every = max(1, steps // 128)

    for n in range(steps):
        h1 = sampler.at_index(2 * n)
        k1 = rhs(h1, y)
        h2 = sampler.at_index(2 * n + 1)
        k2 = rhs(h2, y + (0.5 * h) * k1)
        k3 = rhs(h2, y + (0.5 * h) * k2)
        h3 = sampler.at_index(2 * n + 2)
        k4 = rhs(h3, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if hermitize:
            y = 0.5 * (y + y.conj().swapaxes(-1, -2))

        t_now = (n + 1) * h
        if (n + 1) % check_every == 0 or n + 1 == steps:
            traces = np.einsum("bii->b", y)
            if not np.all(np.isfinite(traces)):
                raise PropagationError("trace became non-finite", t_now)
            drift = float(np.max(np.abs(traces - trace0) / trace_scale))
            max_drift = max(max_drift, drift)
            if drift > TRACE_DRIFT_TOL:
                raise PropagationError(f"trace drifted by {drift:.3e}", t_now)
        if store_every and ((n + 1) % store_every == 0 or n + 1 == steps):
            stored_t.append(t_now)
            stored.append(y.copy())
            if check_positivity:
                for b in range(batch):
                    rho_b = y[b]
                    max_defect = max(max_defect, hermiticity_defect(rho_b))
                    eig = float(np.linalg.eigvalsh(0.5 * (rho_b + rho_b.conj().T))[0])
                    min_eig = min(min_eig, eig)
                    if eig < POSITIVITY_ABORT:
                        raise PropagationError(f"negative eigenvalue {eig:.3e}", t_now)

    if check_positivity:
        for b in range(y.shape[0]):
            rho_b = y[b]
            max_defect = max(max_defect, hermiticity_defect(rho_b))
            eig = float(np.linalg.eigvalsh(0.5 * (rho_b + rho_b.conj().T))[0])
            min_eig = min(min_eig, eig)
            if eig < POSITIVITY_ABORT:
                raise PropagationError(f"negative eigenvalue {eig:.3e}", duration)

    return DensityTrajectory(
        final=y[0] if squeeze else y,
        times=np.array(stored_t) if store_every else None,
        snapshots=np.array(stored) if store_every else None,
        max_trace_drift=max_drift,
        max_hermiticity_defect=max_defect,
        min_eigenvalue=float(min_eig) if math.isfinite(min_eig) else 0.0,
    )


# ---------------------------------------------------------------------------
# analysis helpers built on the same machinery


def adiabaticity_margin(bright: PulseSchedule, model: AtomPairModel, n_per_segment: int = 2001) -> dict:
    """Envelope slew rate against the dressed-gap bound 2 sqrt(2) N^3 / V.

    N = sqrt(V^2 + Omega^2/4) is the exchange-block splitting.  The ratio
    max |d Omega/dt| / bound should stay well below one; crossings of 0.1
    are flagged but not fatal.
    """
    worst_ratio = 0.0
    max_slope = 0.0
    for seg in bright.segments:
        t = np.linspace(seg.t0, seg.t1, n_per_segment)
        amp = np.asarray(seg.envelope(t), dtype=float)
        slope = np.gradient(amp, t)
        v = model.v_values(t)
        gap = np.sqrt(v**2 + 0.25 * amp**2)
        bound = 2.0 * math.sqrt(2.0) * gap**3 / np.abs(v)
        ratio = np.max(np.abs(slope) / bound)
        worst_ratio = max(worst_ratio, float(ratio))
        max_slope = max(max_slope, float(np.max(np.abs(slope))))
    return {
        "max_slope": max_slope,
        "ratio": worst_ratio,
        "flagged": worst_ratio >= ADIABATIC_RATIO_FLAG,
    }


def dark_state_phase_integral(
    target: TargetSchedules,
    model: AtomPairModel,
    theta_gate: float,
    phi_gate: float,
    space: HilbertSpace,
    n_per_segment: int = 2001,
) -> float:
    """Dynamical phase <d2|H|d2> accumulated by the doubly-excited dark state.

    Vanishes identically when the exchange interaction is present, whether
    V is constant or time dependent; evaluated by direct quadrature as a
    consistency check of the Hamiltonian assembly.
    """
    ham = target_step_hamiltonian(space, list(target), model)
    total = 0.0
    for seg in target.bright.segments:
        t = np.linspace(seg.t0, seg.t1, n_per_segment)
        vals = np.empty(t.shape, dtype=float)
        for i, ti in enumerate(t):
            amp = float(target.bright.amplitude(ti))
            ph = float(target.bright.phase(ti))
            v = float(model.v_values(np.array([ti]))[0])
            d2 = pair_dark_bright(space, v, amp * np.exp(1j * ph), theta_gate, phi_gate)["d2"]
            vals[i] = float(np.real(np.vdot(d2, ham(ti) @ d2)))
        total += float(simpson(vals, x=t))
    return total


def ground_exchange_phase_integral(
    target: TargetSchedules,
    model: AtomPairModel,
    n_per_segment: int = 2001,
) -> float:
    """Phase functional Omega^2 phi2_dot / (Omega^2 + 4 V^2) over the pulse.

    Within segments the drive phase is piecewise constant so the integrand
    vanishes; phase jumps contribute delta_phi2 weighted by the instantaneous
    Omega^2/(Omega^2 + 4V^2), which is zero whenever jumps coincide with
    envelope zeros.  Both pieces are evaluated without assuming either.
    """
    bright = target.bright
    total = 0.0
    for seg in bright.segments:
        t = np.linspace(seg.t0, seg.t1, n_per_segment)
        amp = np.asarray(seg.envelope(t), dtype=float)
        phase = np.full_like(t, seg.phase)
        phase_dot = np.gradient(phase, t)
        v = model.v_values(t)
        total += float(simpson(amp**2 * phase_dot / (amp**2 + 4.0 * v**2), x=t))
    for a, b in zip(bright.segments, bright.segments[1:]):
        d_phi = b.phase - a.phase
        if abs(d_phi) > 1e-15:
            amp_b = float(a.envelope(np.array([a.t1]))[0])
            v_b = float(model.v_values(np.array([a.t1]))[0])
            total += d_phi * amp_b**2 / (amp_b**2 + 4.0 * v_b**2)
    return total


def control_geometric_phase(
    schedule: PulseSchedule,
    space: HilbertSpace,
    steps: int = 4000,
    accumulated_gamma: float = 0.0,
) -> dict:
    """Total phase gathered by the control path: gamma jumps plus dynamical part.

    Propagates |1,0> under the control drive and integrates <psi|H|psi>;
    parallel transport makes the dynamical part vanish, leaving the
    accumulated geometric phase alone.  Propagation restarts at every
    segment boundary so no RK4 step straddles a drive-phase jump.
    """
    from .model import control_step_hamiltonian  # local to avoid import clutter

    psi = space.basis_state(("1", "0"))
    n_seg = max(2, steps // max(1, len(schedule.segments)))
    store = max(1, n_seg // 700)
    dynamical = 0.0
    for seg in schedule.segments:
        # rebase the segment to t = 0 as its own one-segment schedule, so the
        # shared-boundary convention of the composite cannot leak the previous
        # phase into this leg's first sample
        env = seg.envelope
        if isinstance(env, Sin2Envelope):
            env = Sin2Envelope(env.peak, env.t_ref - seg.t0, env.period)
        leg = PulseSchedule(
            (PulseSegment(0.0, seg.t1 - seg.t0, env, seg.phase),), schedule.channel
        )
        ham = control_step_hamiltonian(space, leg, model=None, include_interaction=False)
        traj = propagate_state(ham, psi, seg.t1 - seg.t0, n_seg, store_every=store)
        psi = traj.final
        vals = np.array(
            [float(np.real(np.vdot(s, ham(t) @ s))) for t, s in zip(traj.times, traj.states)]
        )
        dynamical += float(simpson(vals, x=traj.times))
    return {
        "dynamical": dynamical,
        "geometric": accumulated_gamma,
        "total": accumulated_gamma + dynamical,
    }
