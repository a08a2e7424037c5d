"""Geometric trajectories, laser pulse synthesis, and pulse-condition checks.

A two-level drive is parametrized by the Bloch-sphere path (theta(t),
eta(t)) of the state orthogonal to the evolving one.  The laser that
realizes a given path has

    |Omega(t)| = sqrt(theta_dot^2 + eta_dot^2 tan^2(theta)),
    phi(t)     = eta - pi/2 - arctan(eta_dot tan(theta) / theta_dot),

and the accompanying phase obeys gamma_dot = -eta_dot sin^2(theta/2)/cos(theta).

Pure parallel transport requires eta_dot sin(theta) = 0, which our piecewise
trajectories satisfy by keeping eta constant inside every segment and
jumping it only where the drive vanishes.  Super-robustness additionally
requires

    integral of (theta_dot/2) exp(-i I(t)) dt = 0,
    I(t) = integral of eta_dot / cos(theta),

where each eta jump contributes delta_eta / cos(theta) to I at the jump
instant.  Both conditions are evaluated here by segment-wise quadrature.

Phase convention for the drives built from these schedules: the coupling
enters the Hamiltonian as (|Omega|/2) e^{-i phi} |excited><ground| + h.c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

TWO_PI = 2.0 * math.pi

SINGULARITY_COS_TOL = 1e-6


class TrajectorySingularityError(ValueError):
    """theta crossed pi/2 (mod pi) while eta was moving: tan(theta) blows up."""


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class TrajectorySegment:
    """One smooth piece of a Bloch path. Angles are callables of absolute time."""

    t0: float
    t1: float
    theta: Callable[[np.ndarray], np.ndarray]
    eta: Callable[[np.ndarray], np.ndarray]
    theta_dot: Callable[[np.ndarray], np.ndarray] | None = None
    eta_dot: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("segment must have positive duration")

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.t0, self.t1, n)

    def sample(self, n: int):
        """(t, theta, eta, theta_dot, eta_dot) on an n-point segment grid.

        Derivatives fall back to one-sided differences that never cross the
        segment edges, so breakpoint jumps cannot contaminate them.
        """
        t = self.grid(n)
        th = np.asarray(self.theta(t), dtype=float)
        et = np.asarray(self.eta(t), dtype=float)
        thd = np.asarray(self.theta_dot(t), dtype=float) if self.theta_dot else np.gradient(th, t)
        etd = np.asarray(self.eta_dot(t), dtype=float) if self.eta_dot else np.gradient(et, t)
        return t, th, et, thd, etd


@dataclass(frozen=True)
class GeometricTrajectory:
    segments: tuple[TrajectorySegment, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        for a, b in zip(self.segments, self.segments[1:]):
            if abs(b.t0 - a.t1) > 1e-12:
                raise ValueError("segments must be contiguous in time")

    @property
    def t_start(self) -> float:
        return self.segments[0].t0

    @property
    def t_end(self) -> float:
        return self.segments[-1].t1

    @property
    def breakpoints(self) -> list[float]:
        return [s.t1 for s in self.segments[:-1]]


def _constant(value: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda t: np.full_like(np.asarray(t, dtype=float), value)


def _linear(slope: float, t_ref: float, offset: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda t: offset + slope * (np.asarray(t, dtype=float) - t_ref)


def piecewise_constant_eta_trajectory(
    omega: float, durations: Sequence[float], etas: Sequence[float], t_start: float = 0.0
) -> GeometricTrajectory:
    """Path with theta growing at constant rate omega and eta fixed per segment."""
    if len(durations) != len(etas):
        raise ValueError("need one eta per segment")
    segments = []
    t0, theta0 = t_start, 0.0
    for dur, eta in zip(durations, etas):
        segments.append(
            TrajectorySegment(
                t0=t0,
                t1=t0 + dur,
                theta=_linear(omega, t0, theta0),
                eta=_constant(eta),
                theta_dot=_constant(omega),
                eta_dot=_constant(0.0),
            )
        )
        theta0 += omega * dur
        t0 += dur
    return GeometricTrajectory(tuple(segments))


# ---------------------------------------------------------------------------
# synthesis and pulse-condition quadratures


def laser_from_trajectory(traj: GeometricTrajectory, points_per_segment: int = 1001) -> dict:
    """Sample the laser amplitude, phase and accompanying-phase rate on the path.

    Returns arrays concatenated over segments: t, omega_abs, phase, gamma_dot.
    Raises TrajectorySingularityError where tan(theta) diverges with eta moving.
    """
    ts, amps, phases, gdots = [], [], [], []
    for seg in traj.segments:
        t, th, et, thd, etd = seg.sample(points_per_segment)
        cos_th = np.cos(th)
        moving = np.abs(etd) > 1e-12
        if np.any(moving & (np.abs(cos_th) < SINGULARITY_COS_TOL)):
            raise TrajectorySingularityError(
                "eta varies while theta sits at pi/2 (mod pi); laser amplitude undefined"
            )
        tan_th = np.where(np.abs(cos_th) < SINGULARITY_COS_TOL, 0.0, np.tan(th))
        amp = np.sqrt(thd**2 + etd**2 * tan_th**2)
        # arctan(eta_dot tan(theta)/theta_dot); zero wherever the path stalls
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.arctan2(etd * tan_th, thd)
        phase = et - 0.5 * math.pi - corr
        with np.errstate(invalid="ignore", divide="ignore"):
            gdot = np.where(
                np.abs(cos_th) < SINGULARITY_COS_TOL,
                0.0,
                -etd * np.sin(0.5 * th) ** 2 / cos_th,
            )
        ts.append(t)
        amps.append(amp)
        phases.append(phase)
        gdots.append(gdot)
    return {
        "t": np.concatenate(ts),
        "omega_abs": np.concatenate(amps),
        "phase": np.concatenate(phases),
        "gamma_dot": np.concatenate(gdots),
    }


def parallel_transport_residual(traj: GeometricTrajectory, points_per_segment: int = 1001) -> float:
    """max |eta_dot sin(theta)| over the path, derivatives taken per segment."""
    worst = 0.0
    for seg in traj.segments:
        _, th, _, _, etd = seg.sample(points_per_segment)
        worst = max(worst, float(np.max(np.abs(etd * np.sin(th)))))
    return worst


def _eta_jumps(traj: GeometricTrajectory):
    """(t_jump, delta_eta, cos_theta) at every interior breakpoint."""
    jumps = []
    for a, b in zip(traj.segments, traj.segments[1:]):
        tb = a.t1
        eta_left = float(np.asarray(a.eta(np.array([tb])))[0])
        eta_right = float(np.asarray(b.eta(np.array([tb])))[0])
        theta_b = float(np.asarray(a.theta(np.array([tb])))[0])
        jumps.append((tb, eta_right - eta_left, math.cos(theta_b)))
    return jumps


def super_robust_integral(traj: GeometricTrajectory, points_per_segment: int = 10001) -> complex:
    """Segment-wise Simpson evaluation of the super-robust pulse condition.

    The inner phase I(t) accumulates eta_dot/cos(theta) inside segments and
    picks up delta_eta/cos(theta) at each breakpoint.  A jump where
    cos(theta) vanishes is singular and rejected.
    """
    total = 0.0 + 0.0j
    inner_acc = 0.0
    jumps = _eta_jumps(traj)
    for k, seg in enumerate(traj.segments):
        t, th, _, thd, etd = seg.sample(points_per_segment)
        cos_th = np.cos(th)
        moving = np.abs(etd) > 1e-12
        if np.any(moving & (np.abs(cos_th) < SINGULARITY_COS_TOL)):
            raise TrajectorySingularityError("eta_dot/cos(theta) singular inside a segment")
        rate = np.where(moving, etd / np.where(np.abs(cos_th) < SINGULARITY_COS_TOL, np.inf, cos_th), 0.0)
        inner = inner_acc + np.concatenate(([0.0], cumulative_simpson(rate, x=t)))
        total += complex(simpson(0.5 * thd * np.exp(-1j * inner), x=t))
        inner_acc = float(inner[-1])
        if k < len(jumps):
            _, d_eta, cos_b = jumps[k]
            if abs(d_eta) > 1e-15 and abs(cos_b) < SINGULARITY_COS_TOL:
                raise TrajectorySingularityError("eta jump where cos(theta) = 0")
            if abs(d_eta) > 1e-15:
                inner_acc += d_eta / cos_b
    return total


def accumulated_geometric_phase(traj: GeometricTrajectory, points_per_segment: int = 10001) -> float:
    """Total gamma from gamma_dot quadrature plus the breakpoint jumps.

    In-segment part integrates -eta_dot sin^2(theta/2)/cos(theta); each eta
    jump adds -delta_eta sin^2(theta/2)/cos(theta) at the jump instant.
    """
    gamma = 0.0
    for seg in traj.segments:
        t, th, _, _, etd = seg.sample(points_per_segment)
        cos_th = np.cos(th)
        integrand = np.where(
            np.abs(etd) > 1e-12,
            -etd * np.sin(0.5 * th) ** 2 / np.where(np.abs(cos_th) < SINGULARITY_COS_TOL, np.inf, cos_th),
            0.0,
        )
        gamma += float(simpson(integrand, x=t))
    for _, d_eta, cos_b in _eta_jumps(traj):
        if abs(d_eta) > 1e-15:
            gamma += -d_eta * 0.5 * (1.0 - cos_b) / cos_b  # sin^2(theta/2) = (1-cos)/2
    return gamma


# ---------------------------------------------------------------------------
# pulse schedules


@dataclass(frozen=True)
class ConstEnvelope:
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("amplitude must be nonnegative")

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)

    def scaled(self, factor: float) -> "ConstEnvelope":
        return ConstEnvelope(self.value * factor)

    def reflected(self, t_total: float) -> "ConstEnvelope":
        return self

    @property
    def peak(self) -> float:
        return self.value

    def serialize(self) -> dict:
        return {"kind": "const", "params": {"value": self.value}}


@dataclass(frozen=True)
class Sin2Envelope:
    """peak * sin^2(2 pi (t - t_ref) / period)."""

    peak: float
    t_ref: float
    period: float

    def __post_init__(self):
        if self.peak < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.period <= 0:
            raise ValueError("period must be positive")

    def __call__(self, t):
        return self.peak * np.sin(TWO_PI * (np.asarray(t, dtype=float) - self.t_ref) / self.period) ** 2

    def scaled(self, factor: float) -> "Sin2Envelope":
        return Sin2Envelope(self.peak * factor, self.t_ref, self.period)

    def reflected(self, t_total: float) -> "Sin2Envelope":
        # sin^2 is even, so time reversal maps t_ref to t_total - t_ref
        return Sin2Envelope(self.peak, t_total - self.t_ref, self.period)

    def serialize(self) -> dict:
        return {"kind": "sin2", "params": {"peak": self.peak, "t_ref": self.t_ref, "period": self.period}}


ENVELOPE_KINDS = {"const", "sin2"}


def envelope_from_dict(d: dict):
    kind = d.get("kind")
    params = d.get("params", {})
    if kind == "const":
        return ConstEnvelope(float(params["value"]))
    if kind == "sin2":
        return Sin2Envelope(float(params["peak"]), float(params["t_ref"]), float(params["period"]))
    raise ValueError(f"unknown envelope kind {kind!r}")


@dataclass(frozen=True)
class DriveChannel:
    """Which two levels of which atom a schedule drives."""

    atom: str  # "control" | "target"
    ground: str
    excited: str

    def __post_init__(self):
        if self.atom not in ("control", "target"):
            raise ValueError("atom must be 'control' or 'target'")


CONTROL_1_RP = DriveChannel("control", "1", "R'")
TARGET_0_R = DriveChannel("target", "0", "r")
TARGET_1_R = DriveChannel("target", "1", "r")


@dataclass(frozen=True)
class PulseSegment:
    """Envelope and constant phase over [t0, t1]; times are schedule-local."""

    t0: float
    t1: float
    envelope: object
    phase: float

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("segment must have positive duration")


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple[PulseSegment, ...]
    channel: DriveChannel

    def __post_init__(self):
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        if abs(self.segments[0].t0) > 1e-12:
            raise ValueError("schedule must start at t = 0")
        for a, b in zip(self.segments, self.segments[1:]):
            if abs(b.t0 - a.t1) > 1e-12:
                raise ValueError("segments must be contiguous")

    @property
    def duration(self) -> float:
        return self.segments[-1].t1

    def _boundaries(self) -> np.ndarray:
        return np.array([s.t1 for s in self.segments])

    def _segment_of(self, t: np.ndarray) -> np.ndarray:
        # a point exactly on a boundary belongs to the earlier segment
        return np.clip(np.searchsorted(self._boundaries(), t, side="left"), 0, len(self.segments) - 1)

    def amplitude(self, t) -> np.ndarray:
        """|Omega|(t), zero outside [0, duration]."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = np.zeros_like(tt)
        seg_idx = self._segment_of(tt)
        inside = (tt >= 0.0) & (tt <= self.duration)
        for k, seg in enumerate(self.segments):
            m = inside & (seg_idx == k)
            if np.any(m):
                out[m] = seg.envelope(tt[m])
        return float(out[0]) if scalar else out

    def phase(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        seg_idx = self._segment_of(tt)
        phases = np.array([s.phase for s in self.segments])
        out = phases[seg_idx]
        return float(out[0]) if scalar else out

    def scaled(self, factor: float) -> "PulseSchedule":
        segs = tuple(replace(s, envelope=s.envelope.scaled(factor)) for s in self.segments)
        return PulseSchedule(segs, self.channel)

    def reversed(self) -> "PulseSchedule":
        """Time-reversed schedule with every phase advanced by pi.

        Running it realizes the exact inverse of the original unitary:
        H'(s) = -H(T - s).
        """
        T = self.duration
        segs = tuple(
            PulseSegment(
                t0=T - s.t1,
                t1=T - s.t0,
                envelope=s.envelope.reflected(T),
                phase=s.phase + math.pi,
            )
            for s in reversed(self.segments)
        )
        return PulseSchedule(segs, self.channel)

    def pulse_area(self) -> float:
        """Time integral of the amplitude over the whole schedule."""
        total = 0.0
        for s in self.segments:
            t = np.linspace(s.t0, s.t1, 4001)
            total += float(simpson(s.envelope(t), x=t))
        return total

    def serialize(self) -> dict:
        return {
            "channel": {"atom": self.channel.atom, "ground": self.channel.ground, "excited": self.channel.excited},
            "segments": [
                {"t0": s.t0, "t1": s.t1, "envelope": s.envelope.serialize(), "phase": s.phase}
                for s in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSchedule":
        ch = d["channel"]
        channel = DriveChannel(ch["atom"], ch["ground"], ch["excited"])
        segs = tuple(
            PulseSegment(float(s["t0"]), float(s["t1"]), envelope_from_dict(s["envelope"]), float(s["phase"]))
            for s in d["segments"]
        )
        return cls(segs, channel)


def apply_rabi_error(schedules, eps: float):
    """Scale every amplitude by (1 + eps); eps = -1 switches the drive off."""
    if eps < -1.0:
        raise ValueError("relative amplitude error below -1 is unphysical")
    return schedules.scaled(1.0 + eps)


# ---------------------------------------------------------------------------
# the shipped gate schedules

CONTROL_PHASES = (math.pi / 3.0, -math.pi / 3.0, math.pi / 3.0)
TARGET_PHASES = (0.0, 1.5 * math.pi, 0.0, 1.5 * math.pi)


def control_pulse_duration(omega_max: float) -> float:
    """Three half-turns at constant rate omega_max."""
    return 3.0 * math.pi / omega_max


def control_schedule(omega_max: float) -> PulseSchedule:
    """Constant-amplitude control pulse, three equal segments with phase jumps.

    Drives control |1> <-> |R'>; takes |1> around three great-circle loops
    whose accumulated geometric phase and echo structure cancel amplitude
    errors to leading order.
    """
    if omega_max <= 0:
        raise ValueError("omega_max must be positive")
    tau1 = control_pulse_duration(omega_max)
    seg_t = tau1 / 3.0
    segs = tuple(
        PulseSegment(k * seg_t, (k + 1) * seg_t, ConstEnvelope(omega_max), CONTROL_PHASES[k])
        for k in range(3)
    )
    return PulseSchedule(segs, CONTROL_1_RP)


def control_trajectory(omega_max: float, t_start: float = 0.0) -> GeometricTrajectory:
    """Bloch path matching control_schedule: eta = phase + pi/2 per segment."""
    seg_t = control_pulse_duration(omega_max) / 3.0
    etas = [p + 0.5 * math.pi for p in CONTROL_PHASES]
    return piecewise_constant_eta_trajectory(omega_max, [seg_t] * 3, etas, t_start)


def target_pulse_duration(theta_gate: float, omega_max: float) -> float:
    """tau2 = 12 pi cos(Theta/2) / omega_max.

    The bright-transition envelope peaks at 8 pi / tau2, so the strong leg,
    which carries a cos(Theta/2) share of it, peaks at 2 omega_max / 3 for
    every gate angle.
    """
    c = math.cos(0.5 * theta_gate)
    if abs(c) < 1e-12:
        raise ValueError("cos(Theta/2) = 0 leaves the pulse duration undefined")
    return 12.0 * math.pi * abs(c) / omega_max


@dataclass(frozen=True)
class TargetSchedules:
    """Bright-transition schedule plus its two physical-leg projections.

    bright carries (|Omega_t|, phi_2); leg0 and leg1 drive |0> <-> |r| and
    |1> <-> |r| with amplitudes |Omega_t| sin(Theta/2) and |Omega_t| cos(Theta/2).
    A negative sin(Theta/2) is folded into a pi phase offset on leg0.
    """

    bright: PulseSchedule
    leg0: PulseSchedule | None
    leg1: PulseSchedule

    def __iter__(self):
        return iter([s for s in (self.leg0, self.leg1) if s is not None])

    def scaled(self, factor: float) -> "TargetSchedules":
        return TargetSchedules(
            self.bright.scaled(factor),
            self.leg0.scaled(factor) if self.leg0 else None,
            self.leg1.scaled(factor),
        )

    @property
    def duration(self) -> float:
        return self.bright.duration


def _bright_sin2_segments(tau2: float, phases: Sequence[float]) -> tuple[PulseSegment, ...]:
    peak = 8.0 * math.pi / tau2
    quarter = tau2 / 4.0
    refs = (0.0, 0.0, 0.5 * tau2, 0.5 * tau2)
    return tuple(
        PulseSegment(k * quarter, (k + 1) * quarter, Sin2Envelope(peak, refs[k], 0.5 * tau2), phases[k])
        for k in range(len(phases))
    )


def _project_legs(bright: PulseSchedule, theta_gate: float, phi_gate: float) -> TargetSchedules:
    s, c = math.sin(0.5 * theta_gate), math.cos(0.5 * theta_gate)
    leg0 = None
    if abs(s) > 1e-15:
        extra = math.pi if s < 0 else 0.0
        leg0 = PulseSchedule(
            tuple(
                replace(seg, envelope=seg.envelope.scaled(abs(s)), phase=seg.phase + phi_gate + extra)
                for seg in bright.segments
            ),
            TARGET_0_R,
        )
    leg1 = PulseSchedule(
        tuple(replace(seg, envelope=seg.envelope.scaled(abs(c))) for seg in bright.segments),
        TARGET_1_R,
    )
    return TargetSchedules(bright, leg0, leg1)


def target_schedules(theta_gate: float, phi_gate: float, omega_max: float) -> TargetSchedules:
    """Four-quarter sin^2 bright pulse with the super-robust phase pattern.

    Each quarter has pulse area pi; phases step through {0, 3pi/2, 0, 3pi/2}.
    """
    tau2 = target_pulse_duration(theta_gate, omega_max)
    bright = PulseSchedule(_bright_sin2_segments(tau2, TARGET_PHASES), TARGET_1_R)
    return _project_legs(bright, theta_gate, phi_gate)


def target_trajectory(theta_gate: float, omega_max: float, t_start: float = 0.0) -> GeometricTrajectory:
    """Bloch path of the bright transition under target_schedules."""
    tau2 = target_pulse_duration(theta_gate, omega_max)
    peak = 8.0 * math.pi / tau2
    quarter = tau2 / 4.0
    a = TWO_PI / (0.5 * tau2)  # envelope angular argument rate

    def envelope_area(s):
        # integral of peak * sin^2(a u) du from 0 to s
        return peak * (0.5 * s - np.sin(2.0 * a * s) / (4.0 * a))

    def theta_fn(t_ref: float, theta_off: float):
        return lambda t: theta_off + envelope_area(np.asarray(t, dtype=float) - t_start - t_ref)

    def theta_dot_fn(t_ref: float):
        return lambda t: peak * np.sin(a * (np.asarray(t, dtype=float) - t_start - t_ref)) ** 2

    segments = []
    refs = (0.0, 0.0, 0.5 * tau2, 0.5 * tau2)
    for k in range(4):
        # theta reaches k*pi at the start of quarter k (area pi per quarter)
        s_start = k * quarter - refs[k]
        theta_off = k * math.pi - float(envelope_area(s_start))
        segments.append(
            TrajectorySegment(
                t0=t_start + k * quarter,
                t1=t_start + (k + 1) * quarter,
                theta=theta_fn(refs[k], theta_off),
                eta=_constant(TARGET_PHASES[k] + 0.5 * math.pi),
                theta_dot=theta_dot_fn(refs[k]),
                eta_dot=_constant(0.0),
            )
        )
    return GeometricTrajectory(tuple(segments))


# baseline pulses


def pi_pulse_schedule(omega_max: float, phase: float, channel: DriveChannel = CONTROL_1_RP) -> PulseSchedule:
    """Plain resonant pi pulse at constant amplitude and phase."""
    dur = math.pi / omega_max
    return PulseSchedule((PulseSegment(0.0, dur, ConstEnvelope(omega_max), phase),), channel)


def constant_area_schedule(
    omega_max: float, area: float, phase: float, channel: DriveChannel
) -> PulseSchedule:
    """Constant-amplitude pulse with the requested pulse area."""
    dur = area / omega_max
    return PulseSchedule((PulseSegment(0.0, dur, ConstEnvelope(omega_max), phase),), channel)


def dark_state_target_duration(theta_gate: float, omega_max: float) -> float:
    """Single-loop adiabatic pulse runs at half the super-robust duration."""
    return 0.5 * target_pulse_duration(theta_gate, omega_max)


def dark_state_target_schedules(theta_gate: float, phi_gate: float, omega_max: float) -> TargetSchedules:
    """Two-hump sin^2 bright pulse of total area 2 pi at constant phase."""
    tau2 = dark_state_target_duration(theta_gate, omega_max)
    peak = 4.0 * math.pi / tau2
    bright = PulseSchedule(
        (PulseSegment(0.0, tau2, Sin2Envelope(peak, 0.0, 0.5 * tau2), 0.0),),
        TARGET_1_R,
    )
    return _project_legs(bright, theta_gate, phi_gate)
