"""Gate protocols: pulse sequencing, tomography, and ideal comparators.

All three schemes share the same three-step skeleton acting on the pair:

  (i)   a control pulse moving |1>_c into the Rydberg state |R'>,
  (ii)  a target pulse driving the bright superposition towards |r>,
  (iii) the inverse of step (i).

They differ in the pulses and in how the doubly-excited manifold reacts:
the geometric scheme and the adiabatic dark-state baseline rely on the
resonant exchange V (|r'R><R'r| + h.c.), the conventional blockade
baseline on a level shift V |R'r><R'r|.  The realized map is measured by
propagating the 16 computational basis operators |i><j| and reading the
4x4 blocks back out; that linear-extension tomography is exact for a
Lindblad channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import pulses
from .model import (
    AtomPairModel,
    CollapseChannel,
    DissipationRates,
    DopplerModel,
    StepHamiltonian,
    TwoPhotonLadder,
    collapse_set,
    control_step_hamiltonian,
    drive_term,
    interaction_terms,
    ladder_decay_channels,
    ladder_detuning_static,
    ladder_drive_terms,
    pair_space,
)
from .propagate import DensityTrajectory, propagate_density
from .pulses import TWO_PI, PulseSchedule, TargetSchedules, apply_rabi_error
from .qcore import HilbertSpace, project_to_computational

SCHEMES = ("super_robust", "dark_state", "blockade")
EXCITATION_MODES = ("effective", "full")

# keep the intermediate-state detuning resolved by the integrator
LADDER_PHASE_PER_STEP = 0.12

NAMED_GATES = {
    # (phi, Theta) of the target rotation
    "CZ": (0.0, 0.0),
    "CNOT": (0.0, -0.5 * math.pi),
    "CHadamard": (0.0, -0.25 * math.pi),
}


@dataclass(frozen=True)
class GateSpec:
    name: str
    theta: float
    phi: float

    @classmethod
    def from_name(cls, name: str) -> "GateSpec":
        try:
            phi, theta = NAMED_GATES[name]
        except KeyError:
            raise ValueError(f"unknown gate {name!r}; expected one of {sorted(NAMED_GATES)}") from None
        return cls(name, theta, phi)

    @classmethod
    def custom(cls, theta: float, phi: float) -> "GateSpec":
        return cls("custom", theta, phi)


def ideal_two_qubit_unitary(gate: GateSpec) -> np.ndarray:
    """|0><0| x U_t + |1><1| x I on the (|00>,|01>,|10>,|11>) basis."""
    c, s = math.cos(gate.theta), math.sin(gate.theta)
    u_t = np.array(
        [
            [c, -np.exp(1j * gate.phi) * s],
            [-np.exp(-1j * gate.phi) * s, -c],
        ],
        dtype=complex,
    )
    u = np.eye(4, dtype=complex)
    u[:2, :2] = u_t
    return u


def blockade_ideal_unitary() -> np.ndarray:
    """pi - 2pi - pi blockade sequence target: diag(1, -1, -1, -1)."""
    return np.diag([1.0, -1.0, -1.0, -1.0]).astype(complex)


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulated gate run."""

    gate: GateSpec
    scheme: str = "super_robust"
    omega_max: float = TWO_PI * 8.0  # rad/us
    xi: float = 0.0
    epsilon: float = 0.0
    model: AtomPairModel = field(default_factory=lambda: AtomPairModel.from_geometry(TWO_PI * 64.4e3, 6.0))
    rates: DissipationRates = field(default_factory=DissipationRates)
    doppler: DopplerModel | None = None
    excitation: str = "effective"
    steps_per_protocol_step: int = 4000
    seed: int = 0
    rri_fluctuation: float = 0.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.excitation not in EXCITATION_MODES:
            raise ValueError(f"excitation must be one of {EXCITATION_MODES}")
        if self.omega_max <= 0:
            raise ValueError("omega_max must be positive")
        if self.xi < -1.0 or self.epsilon < -1.0:
            raise ValueError("relative amplitude errors below -1 are unphysical")
        if self.steps_per_protocol_step < 100:
            raise ValueError("need at least 100 integrator steps per protocol step")
        if self.scheme == "blockade" and self.gate.name != "CZ":
            raise ValueError("the blockade baseline defines only the CZ-type gate")
        if self.excitation == "full":
            if self.model.ladder is None:
                raise ValueError("full excitation mode needs two-photon ladder parameters")
            if self.doppler is not None:
                raise ValueError("Doppler dephasing is only modeled for the effective drive")

    def effective_model(self) -> AtomPairModel:
        if self.rri_fluctuation:
            return self.model.scaled_interaction(1.0 + self.rri_fluctuation)
        return self.model


@dataclass
class ProtocolStep:
    duration: float
    hamiltonian: StepHamiltonian
    channels: list[CollapseChannel]
    n_steps: int


@dataclass
class ProtocolPlan:
    space: HilbertSpace
    steps: list[ProtocolStep]
    ideal: np.ndarray
    control: PulseSchedule
    target: TargetSchedules | None
    gate: GateSpec
    scheme: str

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.steps)


def _ladder_steps(duration: float, base: int, delta: float) -> int:
    return max(base, int(math.ceil(duration * delta / LADDER_PHASE_PER_STEP)))


def _build_step(
    cfg: ScenarioConfig,
    space: HilbertSpace,
    model: AtomPairModel,
    schedules: Sequence[PulseSchedule],
    channels: list[CollapseChannel],
    doppler_fn: Callable | None,
) -> ProtocolStep:
    duration = max(s.duration for s in schedules)
    static, offdiag, diag = interaction_terms(space, model)
    n = cfg.steps_per_protocol_step
    if cfg.excitation == "full":
        ladder = model.ladder
        static = static + ladder_detuning_static(space, ladder)
        for sched in schedules:
            od, dg = ladder_drive_terms(space, sched, ladder)
            offdiag = list(offdiag) + od
            diag = list(diag) + dg
        n = _ladder_steps(duration, n, ladder.delta)
    else:
        offdiag = list(offdiag) + [drive_term(space, s, doppler_fn) for s in schedules]
    ham = StepHamiltonian(space.dim, static, offdiag, diag)
    return ProtocolStep(duration, ham, channels, n)


def _doppler_fns(cfg: ScenarioConfig, durations: Sequence[float], rng: np.random.Generator | None):
    if cfg.doppler is None:
        return [None] * len(durations)
    realization = cfg.doppler.realize(durations, rng)
    return [
        (lambda t, k=k: realization.phase(k, t)) for k in range(len(durations))
    ]


def build_protocol(cfg: ScenarioConfig, rng: np.random.Generator | None = None) -> ProtocolPlan:
    """Assemble the three-step plan for the configured scheme."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    model = cfg.effective_model()

    if cfg.scheme == "super_robust":
        control = apply_rabi_error(pulses.control_schedule(cfg.omega_max), cfg.xi)
        target = apply_rabi_error(pulses.target_schedules(cfg.gate.theta, cfg.gate.phi, cfg.omega_max), cfg.epsilon)
        control_back = control.reversed()
        ideal = ideal_two_qubit_unitary(cfg.gate)
        rates = cfg.rates
    elif cfg.scheme == "dark_state":
        control = apply_rabi_error(pulses.pi_pulse_schedule(cfg.omega_max, 0.0), cfg.xi)
        target = apply_rabi_error(
            pulses.dark_state_target_schedules(cfg.gate.theta, cfg.gate.phi, cfg.omega_max), cfg.epsilon
        )
        control_back = apply_rabi_error(pulses.pi_pulse_schedule(cfg.omega_max, math.pi), cfg.xi)
        ideal = ideal_two_qubit_unitary(cfg.gate)
        rates = cfg.rates
    else:  # blockade
        model = replace_interaction(model, "shift")
        control = apply_rabi_error(pulses.pi_pulse_schedule(cfg.omega_max, 0.0), cfg.xi)
        bright = apply_rabi_error(
            pulses.constant_area_schedule(cfg.omega_max, 2.0 * math.pi, 0.0, pulses.TARGET_1_R), cfg.epsilon
        )
        target = TargetSchedules(bright, None, bright)
        control_back = apply_rabi_error(pulses.pi_pulse_schedule(cfg.omega_max, 0.0), cfg.xi)
        ideal = blockade_ideal_unitary()
        rates = cfg.rates.blockade_reduced()

    space = model.space()
    channels = collapse_set(rates.as_list(), space)
    if cfg.excitation == "full":
        channels = channels + ladder_decay_channels(space, model.ladder.gamma_p)

    durations = (control.duration, target.duration, control_back.duration)
    dop = _doppler_fns(cfg, durations, rng)
    steps = [
        _build_step(cfg, space, model, [control], channels, dop[0]),
        _build_step(cfg, space, model, list(target), channels, dop[1]),
        _build_step(cfg, space, model, [control_back], channels, dop[2]),
    ]
    return ProtocolPlan(space, steps, ideal, control, target, cfg.gate, cfg.scheme)


def replace_interaction(model: AtomPairModel, kind: str) -> AtomPairModel:
    return AtomPairModel(
        V=model.V,
        C3=model.C3,
        distance_um=model.distance_um,
        leakage=model.leakage,
        interaction=kind,
        ladder=model.ladder,
    )


# ---------------------------------------------------------------------------
# execution


@dataclass
class QuantumChannel:
    """Completely positive map reconstructed from basis-operator images.

    images[i, j] is the 4x4 computational-block image of |i><j|.
    """

    images: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=complex)
        if self.images.shape != (4, 4, 4, 4):
            raise ValueError("expected (4, 4, 4, 4) basis images")

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError("channel acts on 4x4 operators")
        return np.einsum("ij,ijkl->kl", rho, self.images)

    def basis_state_traces(self) -> np.ndarray:
        """tr of the images of the four basis projectors |i><i|."""
        return np.array([float(np.real(np.trace(self.images[i, i]))) for i in range(4)])


@dataclass
class RunDiagnostics:
    max_trace_drift: float = 0.0
    total_duration: float = 0.0
    ideal: np.ndarray | None = None


def execute_plan(plan: ProtocolPlan, operators: np.ndarray, hermitize: bool = False, store_every: int = 0):
    """Propagate a batch of operators through every protocol step in order.

    Returns (final batch, list of per-step DensityTrajectory results).
    """
    y = np.asarray(operators, dtype=complex)
    results: list[DensityTrajectory] = []
    for step in plan.steps:
        res = propagate_density(
            step.hamiltonian,
            y,
            step.channels,
            step.duration,
            step.n_steps,
            hermitize=hermitize,
            check_positivity=False,
            store_every=store_every,
        )
        y = res.final
        results.append(res)
    return y, results


def computational_basis_operators(space: HilbertSpace) -> np.ndarray:
    """The 16 operators |i><j| embedded in the full space, batch-ordered."""
    idx = space.computational_indices()
    ops = np.zeros((16, space.dim, space.dim), dtype=complex)
    k = 0
    for i in range(4):
        for j in range(4):
            ops[k, idx[i], idx[j]] = 1.0
            k += 1
    return ops


def channel_tomography(plan: ProtocolPlan) -> tuple[QuantumChannel, RunDiagnostics]:
    """Measure the realized computational-subspace map of a protocol plan."""
    ops = computational_basis_operators(plan.space)
    final, results = execute_plan(plan, ops, hermitize=False)
    images = np.zeros((4, 4, 4, 4), dtype=complex)
    k = 0
    for i in range(4):
        for j in range(4):
            images[i, j] = project_to_computational(final[k], plan.space)
            k += 1
    diag = RunDiagnostics(
        max_trace_drift=max(r.max_trace_drift for r in results),
        total_duration=plan.total_duration,
        ideal=plan.ideal,
    )
    return QuantumChannel(images), diag


def run_channel(cfg: ScenarioConfig) -> tuple[QuantumChannel, RunDiagnostics]:
    """Build and tomograph the configured scenario."""
    plan = build_protocol(cfg)
    return channel_tomography(plan)


def _expect_scheme(cfg: ScenarioConfig, scheme: str) -> ScenarioConfig:
    if cfg.scheme != scheme:
        cfg = replace(cfg, scheme=scheme)
    return cfg


def run_super_robust_protocol(cfg: ScenarioConfig) -> tuple[QuantumChannel, RunDiagnostics]:
    return run_channel(_expect_scheme(cfg, "super_robust"))


def run_dark_state_baseline(cfg: ScenarioConfig) -> tuple[QuantumChannel, RunDiagnostics]:
    return run_channel(_expect_scheme(cfg, "dark_state"))


def run_blockade_baseline(cfg: ScenarioConfig) -> tuple[QuantumChannel, RunDiagnostics]:
    return run_channel(_expect_scheme(cfg, "blockade"))
