"""Two-atom level scheme, step Hamiltonians, dissipation and noise models.

Level scheme (cesium hyperfine qubits with two Rydberg levels per atom):

    control: {|0>, |1>, |R'>, |r'>}      drive couples |1> <-> |R'>
    target:  {|0>, |1>, |r>,  |R>}       drives couple |0>,|1> <-> |r>

The resonant dipole-dipole exchange V (|r'R><R'r| + h.c.) converts the
doubly-excited pair |R'r> into |r'R> and back; V = C3 / d^3.  The
conventional blockade comparator replaces the exchange by a level shift
V |R'r><R'r|.

Drive matrix elements follow <excited|H|ground> = (|Omega|/2) e^{-i phi},
optionally multiplied by a Doppler factor e^{+i k v t}.

Step Hamiltonians are represented as a static matrix plus sparse
time-dependent placements so the propagator can sample all drive values
on its time grid in one vectorized pass.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .pulses import DriveChannel, PulseSchedule, TWO_PI
from .qcore import HilbertSpace, level_projector, single_atom_operator, transition_operator

KB_J_PER_K = 1.380649e-23
CS_MASS_KG = 2.207e-25

# effective chirp wavevector of the two-photon drive, rad/um; calibrated so
# the constant-speed model reproduces measured temperature scans (numerically
# close to the co-propagating pair wavevector scaled by the 3D rms speed)
DEFAULT_K_EFF = 33.0

CONTROL_LEVELS = ("0", "1", "R'", "r'")
TARGET_LEVELS = ("0", "1", "r", "R")
CONTROL_LEVELS_LADDER = ("0", "1", "P", "R'", "r'")
TARGET_LEVELS_LADDER = ("0", "1", "P0", "P1", "r", "R")

V_CONSISTENCY_RTOL = 1e-9


def pair_space(ladder: bool = False, leakage_labels: Sequence[str] = ()) -> HilbertSpace:
    control = CONTROL_LEVELS_LADDER if ladder else CONTROL_LEVELS
    target = TARGET_LEVELS_LADDER if ladder else TARGET_LEVELS
    return HilbertSpace(
        factor_dims=(len(control), len(target)),
        level_labels=(control, target),
        extra_labels=tuple(leakage_labels),
    )


@dataclass(frozen=True)
class LeakageChannel:
    """Off-resonant pair state coupled to one of the doubly-excited states."""

    source: str  # "R'r" or "r'R"
    coupling: float  # rad/us
    detuning: float  # rad/us

    def __post_init__(self):
        if self.source not in ("R'r", "r'R"):
            raise ValueError("leakage source must be \"R'r\" or \"r'R\"")


@dataclass(frozen=True)
class TwoPhotonLadder:
    """Two-photon drive parameters; the effective Rabi rate is w_r w_b / (2 delta)."""

    omega_r: float
    omega_b: float
    delta: float
    gamma_p: float = TWO_PI * 3.2  # intermediate-state decay, rad/us
    stark_compensation: bool = True

    def __post_init__(self):
        if min(self.omega_r, self.omega_b, self.delta) <= 0:
            raise ValueError("ladder frequencies must be positive")
        if self.delta < 5.0 * max(self.omega_r, self.omega_b):
            warnings.warn(
                "intermediate detuning is not large against the single-photon "
                "Rabi rates; adiabatic elimination is marginal",
                stacklevel=2,
            )

    def omega_eff(self) -> float:
        return self.omega_r * self.omega_b / (2.0 * self.delta)


def two_photon_hamiltonians(ladder: TwoPhotonLadder) -> tuple[np.ndarray, np.ndarray]:
    """Constant-drive (|g>, |P>, |Ryd>) ladder Hamiltonian and its 2-level reduction."""
    h_full = np.array(
        [
            [0.0, 0.5 * ladder.omega_r, 0.0],
            [0.5 * ladder.omega_r, ladder.delta, 0.5 * ladder.omega_b],
            [0.0, 0.5 * ladder.omega_b, 0.0],
        ],
        dtype=complex,
    )
    w = ladder.omega_eff()
    h_eff = np.array([[0.0, 0.5 * w], [0.5 * w, 0.0]], dtype=complex)
    return h_full, h_eff


@dataclass(frozen=True)
class AtomPairModel:
    """Interaction and leakage structure of the atom pair.

    V may be a constant (rad/us) or a callable of time for a moving pair.
    When C3 (rad/us um^3) and distance (um) are both given alongside a
    constant V, consistency with C3/d^3 is enforced.
    """

    V: float | Callable
    C3: float | None = None
    distance_um: float | None = None
    leakage: tuple[LeakageChannel, ...] = ()
    interaction: str = "exchange"  # "exchange" | "shift"
    ladder: TwoPhotonLadder | None = None

    def __post_init__(self):
        if self.interaction not in ("exchange", "shift"):
            raise ValueError("interaction must be 'exchange' or 'shift'")
        if not callable(self.V) and self.C3 is not None and self.distance_um is not None:
            v_geom = self.C3 / self.distance_um**3
            if abs(self.V - v_geom) > V_CONSISTENCY_RTOL * max(abs(self.V), abs(v_geom)):
                raise ValueError(
                    f"V = {self.V} rad/us is inconsistent with C3/d^3 = {v_geom} rad/us"
                )

    @classmethod
    def from_geometry(cls, C3: float, distance_um: float, **kw) -> "AtomPairModel":
        return cls(V=C3 / distance_um**3, C3=C3, distance_um=distance_um, **kw)

    def space(self) -> HilbertSpace:
        labels = tuple(f"L{k + 1}" for k in range(len(self.leakage)))
        return pair_space(ladder=self.ladder is not None, leakage_labels=labels)

    def v_values(self, times: np.ndarray) -> np.ndarray:
        if callable(self.V):
            return np.asarray(self.V(np.asarray(times, dtype=float)), dtype=float)
        return np.full(np.asarray(times).shape, float(self.V))

    def scaled_interaction(self, factor: float) -> "AtomPairModel":
        """Static fractional change of V, e.g. a Rydberg-Rydberg fluctuation."""
        if callable(self.V):
            base = self.V
            return self._replace_v(lambda t: factor * np.asarray(base(t)))
        return self._replace_v(float(self.V) * factor)

    def _replace_v(self, new_v) -> "AtomPairModel":
        return AtomPairModel(
            V=new_v,
            C3=None,
            distance_um=None,
            leakage=self.leakage,
            interaction=self.interaction,
            ladder=self.ladder,
        )


# ---------------------------------------------------------------------------
# dark and bright states


def dark_bright_states(theta_gate: float, phi_gate: float) -> tuple[np.ndarray, np.ndarray]:
    """Target-atom bright and dark superpositions (4-component kets)."""
    s, c = math.sin(0.5 * theta_gate), math.cos(0.5 * theta_gate)
    bright = np.zeros(4, dtype=complex)
    dark = np.zeros(4, dtype=complex)
    bright[0] = s * np.exp(1j * phi_gate)
    bright[1] = c
    dark[0] = c
    dark[1] = -s * np.exp(-1j * phi_gate)
    return bright, dark


def pair_dark_bright(
    space: HilbertSpace, V: float, omega_t: complex, theta_gate: float, phi_gate: float
) -> dict[str, np.ndarray]:
    """Eigenvectors of the doubly-excited exchange block during the target pulse.

    omega_t is the complex bright-transition Rabi rate |Omega_t| e^{i phi_2}.
    Returns the dark pair state d2 (zero eigenvalue) and the bright pair
    states b+/b- (eigenvalues +/- sqrt(V^2 + |omega_t|^2/4)).
    """
    bright, _ = dark_bright_states(theta_gate, phi_gate)
    norm = math.sqrt(V**2 + abs(omega_t) ** 2 / 4.0)
    rp_b = np.zeros(space.dim, dtype=complex)
    for lbl, amp in zip(TARGET_LEVELS[:2], bright[:2]):
        rp_b[space.index(("R'", lbl))] = amp
    rp_r = space.basis_state(("R'", "r"))
    rpp_R = space.basis_state(("r'", "R"))
    d2 = (V * rp_b - 0.5 * np.conj(omega_t) * rpp_R) / norm
    b_plus = (0.5 * omega_t * rp_b + norm * rp_r + V * rpp_R) / (math.sqrt(2.0) * norm)
    b_minus = (0.5 * omega_t * rp_b - norm * rp_r + V * rpp_R) / (math.sqrt(2.0) * norm)
    return {"d2": d2, "b_plus": b_plus, "b_minus": b_minus, "splitting": norm}


# ---------------------------------------------------------------------------
# collapse channels


@dataclass(frozen=True)
class CollapseChannel:
    operator: np.ndarray
    rate: float  # rad/us

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("collapse rate must be nonnegative")


@dataclass(frozen=True)
class DissipationRates:
    """Semantic rate table in rad/us; each decay feeds two equal branches."""

    decay_Rp: float = TWO_PI * 0.425e-3
    decay_rp: float = TWO_PI * 0.213e-3
    decay_R: float = TWO_PI * 0.169e-3
    decay_r: float = TWO_PI * 0.336e-3
    dephasing_Rp: float = TWO_PI * 1.0e-3
    dephasing_rp: float = TWO_PI * 1.0e-3
    dephasing_R: float = TWO_PI * 1.0e-3
    dephasing_r: float = TWO_PI * 1.0e-3

    def as_list(self) -> list[float]:
        """Canonical 12-entry rate list, decays first, dephasings last."""
        return [
            self.decay_Rp,
            self.decay_Rp,
            self.decay_rp,
            self.decay_rp,
            self.decay_R,
            self.decay_R,
            self.decay_r,
            self.decay_r,
            self.dephasing_Rp,
            self.dephasing_rp,
            self.dephasing_R,
            self.dephasing_r,
        ]

    def blockade_reduced(self) -> "DissipationRates":
        """Three-level-per-atom variant: channels of the unused levels vanish."""
        return DissipationRates(
            decay_Rp=self.decay_Rp,
            decay_rp=0.0,
            decay_R=0.0,
            decay_r=self.decay_r,
            dephasing_Rp=self.dephasing_Rp,
            dephasing_rp=0.0,
            dephasing_R=0.0,
            dephasing_r=self.dephasing_r,
        )

    @classmethod
    def zero(cls) -> "DissipationRates":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def _dephasing_op(dim: int, labels: Sequence[str], level: str) -> np.ndarray:
    op = level_projector(dim, labels.index(level))
    op -= level_projector(dim, labels.index("0"))
    op -= level_projector(dim, labels.index("1"))
    return op


def collapse_set(rates: Sequence[float], space: HilbertSpace) -> list[CollapseChannel]:
    """The 12 decay and dephasing channels of the pair, embedded in space.

    Order: Rydberg decays (R' -> 0, R' -> 1, r' -> 0, r' -> 1 on the control;
    R -> 0, R -> 1, r -> 0, r -> 1 on the target), then the four dephasing
    operators |Ryd><Ryd| - |0><0| - |1><1| of R', r', R, r.
    """
    if len(rates) != 12:
        raise ValueError("expected 12 rates")
    c_labels, t_labels = space.level_labels
    dc, dt = len(c_labels), len(t_labels)

    def c_op(op):
        return single_atom_operator(space, 0, op)

    def t_op(op):
        return single_atom_operator(space, 1, op)

    def drop(labels, dim, upper, lower):
        return transition_operator(dim, labels.index(lower), labels.index(upper))

    ops = [
        c_op(drop(c_labels, dc, "R'", "0")),
        c_op(drop(c_labels, dc, "R'", "1")),
        c_op(drop(c_labels, dc, "r'", "0")),
        c_op(drop(c_labels, dc, "r'", "1")),
        t_op(drop(t_labels, dt, "R", "0")),
        t_op(drop(t_labels, dt, "R", "1")),
        t_op(drop(t_labels, dt, "r", "0")),
        t_op(drop(t_labels, dt, "r", "1")),
        c_op(_dephasing_op(dc, c_labels, "R'")),
        c_op(_dephasing_op(dc, c_labels, "r'")),
        t_op(_dephasing_op(dt, t_labels, "R")),
        t_op(_dephasing_op(dt, t_labels, "r")),
    ]
    return [CollapseChannel(op, float(g)) for op, g in zip(ops, rates)]


def ladder_decay_channels(space: HilbertSpace, gamma_p: float) -> list[CollapseChannel]:
    """Intermediate-state decay, split equally between the two qubit levels."""
    channels = []
    for factor, labels in ((0, space.level_labels[0]), (1, space.level_labels[1])):
        dim = len(labels)
        for p_label in labels:
            if not p_label.startswith("P"):
                continue
            for ground in ("0", "1"):
                op = transition_operator(dim, labels.index(ground), labels.index(p_label))
                channels.append(CollapseChannel(single_atom_operator(space, factor, op), 0.5 * gamma_p))
    return channels


# ---------------------------------------------------------------------------
# Doppler dephasing


@dataclass(frozen=True)
class DopplerModel:
    """Residual atomic motion imprinting a phase chirp k_eff * v * t on the drive."""

    temperature_uK: float
    k_eff: float = DEFAULT_K_EFF  # rad/um
    echo: bool = True
    velocity: str = "constant"  # "constant" | "gaussian"
    mass_kg: float = CS_MASS_KG

    def __post_init__(self):
        if self.velocity not in ("constant", "gaussian"):
            raise ValueError("velocity mode must be 'constant' or 'gaussian'")
        if self.temperature_uK < 0:
            raise ValueError("temperature must be nonnegative")

    def mean_speed(self) -> float:
        """One-dimensional thermal speed sqrt(kB T / m) in um/us."""
        return math.sqrt(KB_J_PER_K * self.temperature_uK * 1e-6 / self.mass_kg)

    def realize(self, durations: Sequence[float], rng: np.random.Generator | None = None) -> "DopplerRealization":
        """Draw per-atom per-step velocities (Gaussian mode needs rng).

        Speeds are drawn atom-major: control steps (i), (ii), (iii) first,
        then the target's three steps.
        """
        v = self.mean_speed()
        n = len(durations)
        if self.velocity == "gaussian":
            if rng is None:
                raise ValueError("gaussian velocity draws need a random generator")
            speeds = tuple(tuple(float(rng.normal(v, 0.1 * v)) for _ in range(n)) for _ in range(2))
        else:
            speeds = ((v,) * n, (v,) * n)
        return DopplerRealization(self.k_eff, self.echo, tuple(float(d) for d in durations), speeds)


# step index -> driven atom (0 control, 1 target) for the three-step protocol
_DRIVEN_ATOM = (0, 1, 0)


@dataclass(frozen=True)
class DopplerRealization:
    """Piecewise-linear drive phase k * x(t) along the whole protocol.

    The position x(t) integrates one velocity per atom per protocol step,
    so a phase offset built up while an atom idles carries into its next
    pulse.  With the echo enabled the chirp direction of each atom flips
    at the midpoint of every step that drives it.
    """

    k_eff: float
    echo: bool
    durations: tuple[float, ...]
    speeds: tuple[tuple[float, ...], ...]  # [atom][step]

    def _segments(self, atom: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        starts = [0.0]
        for d in self.durations:
            starts.append(starts[-1] + d)
        bounds = list(starts)
        if self.echo:
            for k, driven in enumerate(_DRIVEN_ATOM[: len(self.durations)]):
                if driven == atom:
                    bounds.append(starts[k] + 0.5 * self.durations[k])
        bounds = sorted(set(bounds))
        edges = np.asarray(bounds)
        sign = 1.0
        slopes = []
        for left in edges[:-1]:
            step = min(int(np.searchsorted(np.asarray(starts), left, side="right")) - 1, len(self.durations) - 1)
            if self.echo and _DRIVEN_ATOM[step] == atom and left == starts[step] + 0.5 * self.durations[step]:
                sign = -sign
            slopes.append(sign * self.k_eff * self.speeds[atom][step])
        slopes = np.asarray(slopes)
        prefix = np.concatenate(([0.0], np.cumsum(slopes * np.diff(edges))))
        return edges, slopes, prefix

    def phase(self, step_index: int, t) -> np.ndarray:
        """Doppler phase of the atom driven in step_index at step-local t."""
        atom = _DRIVEN_ATOM[step_index]
        edges, slopes, prefix = self._segments(atom)
        tg = np.asarray(t, dtype=float) + float(np.sum(np.asarray(self.durations[:step_index])))
        j = np.clip(np.searchsorted(edges, tg, side="right") - 1, 0, len(slopes) - 1)
        return prefix[j] + slopes[j] * (tg - edges[j])


def doppler_phase(realization: DopplerRealization, step_index: int, t):
    return realization.phase(step_index, t)


# ---------------------------------------------------------------------------
# step Hamiltonians


@dataclass
class OffDiagTerm:
    """Time-dependent value v(t) at fixed (row, col) slots plus conjugates."""

    upper_flat: np.ndarray
    lower_flat: np.ndarray
    values: Callable[[np.ndarray], np.ndarray]


@dataclass
class DiagTerm:
    flat: np.ndarray
    values: Callable[[np.ndarray], np.ndarray]


class StepHamiltonian:
    """H(t) over one protocol step, in step-local time."""

    def __init__(self, dim: int, static: np.ndarray, offdiag: Sequence[OffDiagTerm] = (), diag: Sequence[DiagTerm] = ()):
        self.dim = dim
        self.static = np.asarray(static, dtype=complex)
        if self.static.shape != (dim, dim):
            raise ValueError("static part has wrong shape")
        self.offdiag = list(offdiag)
        self.diag = list(diag)

    def __call__(self, t: float) -> np.ndarray:
        h = self.static.copy()
        flat = h.reshape(-1)
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        for term in self.offdiag:
            v = complex(np.asarray(term.values(tt)).reshape(-1)[0])
            flat[term.upper_flat] += v
            flat[term.lower_flat] += np.conj(v)
        for term in self.diag:
            v = complex(np.asarray(term.values(tt)).reshape(-1)[0])
            flat[term.flat] += v
        return h

    def sampler(self, times: np.ndarray) -> "SampledStepHamiltonian":
        """Precompute every drive value on a fixed grid for the propagator."""
        off = [(term.upper_flat, term.lower_flat, np.asarray(term.values(times), dtype=complex)) for term in self.offdiag]
        dia = [(term.flat, np.asarray(term.values(times), dtype=complex)) for term in self.diag]
        return SampledStepHamiltonian(self.static, off, dia)


class SampledStepHamiltonian:
    def __init__(self, static, off, dia):
        self.static = static
        self.off = off
        self.dia = dia
        self._buf = np.empty_like(static)

    def at_index(self, j: int) -> np.ndarray:
        h = self._buf
        np.copyto(h, self.static)
        flat = h.reshape(-1)
        for upper, lower, vals in self.off:
            v = vals[j]
            flat[upper] += v
            flat[lower] += np.conj(v)
        for idx, vals in self.dia:
            flat[idx] += vals[j]
        return h


def transition_placement(space: HilbertSpace, channel: DriveChannel) -> tuple[np.ndarray, np.ndarray]:
    """Flat (row, col) slots of |excited><ground| summed over the other atom."""
    factor = 0 if channel.atom == "control" else 1
    other = 1 - factor
    d = space.dim
    uppers, lowers = [], []
    for lbl in space.level_labels[other]:
        pair_u = (channel.excited, lbl) if factor == 0 else (lbl, channel.excited)
        pair_g = (channel.ground, lbl) if factor == 0 else (lbl, channel.ground)
        iu, ig = space.index(pair_u), space.index(pair_g)
        uppers.append(iu * d + ig)
        lowers.append(ig * d + iu)
    return np.array(uppers, dtype=np.intp), np.array(lowers, dtype=np.intp)


def schedule_drive_values(schedule: PulseSchedule, doppler_fn: Callable | None = None) -> Callable:
    """v(t) = (|Omega|/2) e^{-i phi} e^{+i doppler} for the placement slots."""

    def values(times: np.ndarray) -> np.ndarray:
        amp = np.asarray(schedule.amplitude(times), dtype=float)
        ph = np.asarray(schedule.phase(times), dtype=float)
        if doppler_fn is not None:
            ph = ph - np.asarray(doppler_fn(times), dtype=float)
        return 0.5 * amp * np.exp(-1j * ph)

    return values


def drive_term(space: HilbertSpace, schedule: PulseSchedule, doppler_fn: Callable | None = None) -> OffDiagTerm:
    upper, lower = transition_placement(space, schedule.channel)
    return OffDiagTerm(upper, lower, schedule_drive_values(schedule, doppler_fn))


def interaction_terms(space: HilbertSpace, model: AtomPairModel) -> tuple[np.ndarray, list[OffDiagTerm], list[DiagTerm]]:
    """Static matrix plus time-dependent pieces of the pair interaction."""
    d = space.dim
    static = np.zeros((d, d), dtype=complex)
    offdiag: list[OffDiagTerm] = []
    diag: list[DiagTerm] = []

    i_Rpr = space.index(("R'", "r"))  # |R'r>
    if model.interaction == "exchange":
        i_rpR = space.index(("r'", "R"))  # |r'R>
        if callable(model.V):
            offdiag.append(
                OffDiagTerm(
                    np.array([i_rpR * d + i_Rpr], dtype=np.intp),
                    np.array([i_Rpr * d + i_rpR], dtype=np.intp),
                    lambda t: model.v_values(t).astype(complex),
                )
            )
        else:
            static[i_rpR, i_Rpr] = model.V
            static[i_Rpr, i_rpR] = model.V
    else:  # blockade-style level shift of the doubly excited state
        if callable(model.V):
            diag.append(DiagTerm(np.array([i_Rpr * d + i_Rpr], dtype=np.intp), lambda t: model.v_values(t).astype(complex)))
        else:
            static[i_Rpr, i_Rpr] = model.V

    for k, ch in enumerate(model.leakage):
        i_leak = space.extra_index(f"L{k + 1}")
        i_src = space.index(("R'", "r")) if ch.source == "R'r" else space.index(("r'", "R"))
        static[i_leak, i_leak] = ch.detuning
        static[i_leak, i_src] = ch.coupling
        static[i_src, i_leak] = ch.coupling
    return static, offdiag, diag


def control_step_hamiltonian(
    space: HilbertSpace,
    schedule: PulseSchedule,
    model: AtomPairModel | None = None,
    doppler_fn: Callable | None = None,
    include_interaction: bool = True,
) -> StepHamiltonian:
    """Single-atom control drive; the pair interaction stays in place."""
    d = space.dim
    static = np.zeros((d, d), dtype=complex)
    offdiag = []
    diag = []
    if model is not None and include_interaction:
        static, offdiag, diag = interaction_terms(space, model)
    offdiag = list(offdiag) + [drive_term(space, schedule, doppler_fn)]
    return StepHamiltonian(d, static, offdiag, diag)


def target_step_hamiltonian(
    space: HilbertSpace,
    schedules: Sequence[PulseSchedule],
    model: AtomPairModel,
    doppler_fn: Callable | None = None,
) -> StepHamiltonian:
    """Target-atom drives together with the pair interaction."""
    static, offdiag, diag = interaction_terms(space, model)
    offdiag = list(offdiag) + [drive_term(space, s, doppler_fn) for s in schedules]
    return StepHamiltonian(space.dim, static, offdiag, diag)


def hamiltonian_step1(schedule: PulseSchedule, model: AtomPairModel, t: float, doppler_fn: Callable | None = None) -> np.ndarray:
    """Materialized control-pulse Hamiltonian at one instant."""
    return control_step_hamiltonian(model.space(), schedule, model, doppler_fn)(t)


def hamiltonian_step2(schedules: Sequence[PulseSchedule], model: AtomPairModel, t: float, doppler_fn: Callable | None = None) -> np.ndarray:
    """Materialized target-pulse Hamiltonian at one instant."""
    return target_step_hamiltonian(model.space(), schedules, model, doppler_fn)(t)


# ---------------------------------------------------------------------------
# two-photon (ladder) drive terms


def _ladder_level_names(channel: DriveChannel) -> tuple[str, str]:
    """(intermediate, Rydberg) level labels for a driven transition."""
    if channel.atom == "control":
        return "P", channel.excited
    return ("P0", "r") if channel.ground == "0" else ("P1", "r")


def ladder_drive_terms(
    space: HilbertSpace,
    schedule: PulseSchedule,
    ladder: TwoPhotonLadder,
) -> tuple[list[OffDiagTerm], list[DiagTerm]]:
    """Replace an effective two-level drive by its red and blue ladder legs.

    Leg amplitudes scale as the square root of the effective envelope so
    that omega_r(t) omega_b(t) / (2 delta) reproduces the scheduled rate at
    every instant.  The schedule phase rides on the red leg.  Stark
    compensation cancels the differential light shift on the effective
    levels, which is the regime the gate design assumes.
    """
    p_label, ryd_label = _ladder_level_names(schedule.channel)
    factor = 0 if schedule.channel.atom == "control" else 1
    w_eff_nom = ladder.omega_eff()

    def leg_scale(times):
        amp = np.asarray(schedule.amplitude(times), dtype=float)
        return np.sqrt(np.maximum(amp, 0.0) / w_eff_nom)

    def red_values(times):
        return 0.5 * ladder.omega_r * leg_scale(times) * np.exp(-1j * np.asarray(schedule.phase(times), dtype=float))

    def blue_values(times):
        return (0.5 * ladder.omega_b * leg_scale(times)).astype(complex)

    red = OffDiagTerm(*transition_placement(space, DriveChannel(schedule.channel.atom, schedule.channel.ground, p_label)), red_values)
    blue = OffDiagTerm(*transition_placement(space, DriveChannel(schedule.channel.atom, p_label, ryd_label)), blue_values)

    diag: list[DiagTerm] = []
    if ladder.stark_compensation:
        d = space.dim
        other = 1 - factor

        def level_diag_flats(label: str) -> np.ndarray:
            flats = []
            for lbl in space.level_labels[other]:
                pair = (label, lbl) if factor == 0 else (lbl, label)
                i = space.index(pair)
                flats.append(i * d + i)
            return np.array(flats, dtype=np.intp)

        def ground_shift(times):
            return (0.25 * ladder.omega_r**2 / ladder.delta) * leg_scale(times) ** 2 + 0j

        def rydberg_shift(times):
            return (0.25 * ladder.omega_b**2 / ladder.delta) * leg_scale(times) ** 2 + 0j

        diag.append(DiagTerm(level_diag_flats(schedule.channel.ground), ground_shift))
        diag.append(DiagTerm(level_diag_flats(ryd_label), rydberg_shift))
    return [red, blue], diag


def ladder_detuning_static(space: HilbertSpace, ladder: TwoPhotonLadder) -> np.ndarray:
    """Static intermediate-state detuning Delta on every P level."""
    d = space.dim
    static = np.zeros((d, d), dtype=complex)
    for factor, labels in enumerate(space.level_labels):
        for lbl in labels:
            if lbl.startswith("P"):
                static += ladder.delta * single_atom_operator(space, factor, level_projector(len(labels), labels.index(lbl)))
    return static
