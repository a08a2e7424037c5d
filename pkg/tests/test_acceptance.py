"""End-to-end acceptance gate.

One test (or tightly related group) per shipped claim, each printing a
single "criterion N: PASS/FAIL" line with the measured numbers.  Claims
that the faithful pulse tables cannot reach are exercised anyway and
marked xfail(strict) with the measured shortfall and a pointer to the
decisions ledger: a red bar with an explanation beats a cooked green one.

Budgets quoted per criterion are wall-clock on a single desktop core.
"""

import cmath
import math
import time
from pathlib import Path

import numpy as np
import pytest

from geomgate.metrics import (
    average_gate_fidelity,
    convergence_report,
    depolarizing_channel,
    excitation_probability_exact,
    leakage_probability,
)
from geomgate.model import (
    AtomPairModel,
    DissipationRates,
    DopplerModel,
    LeakageChannel,
    TwoPhotonLadder,
)
from geomgate.propagate import (
    dark_state_phase_integral,
    ground_exchange_phase_integral,
    propagate_density,
)
from geomgate.protocols import GateSpec, ScenarioConfig, build_protocol
from geomgate.pulses import (
    TWO_PI,
    control_trajectory,
    parallel_transport_residual,
    super_robust_integral,
    target_schedules,
    target_trajectory,
)
from geomgate.sweep import run_scenario

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

OMEGA = TWO_PI * 8.0
GATES = ("CZ", "CNOT", "CHadamard")


def report(tag: str, ok: bool, detail: str) -> None:
    print(f"criterion {tag}: {'PASS' if ok else 'FAIL'} - {detail}")


def scenario(gate="CZ", **kw) -> ScenarioConfig:
    return ScenarioConfig(gate=GateSpec.from_name(gate), **kw)


def fidelity_of(cfg: ScenarioConfig) -> float:
    return run_scenario(cfg).avg_fidelity


# ---------------------------------------------------------------------------
# 1. pulse conditions


def test_criterion_01_pulse_conditions():
    t0 = time.perf_counter()
    residuals, integrals = [], []
    ctraj = control_trajectory(OMEGA)
    residuals.append(parallel_transport_residual(ctraj))
    integrals.append(abs(super_robust_integral(ctraj)))
    for name in GATES:
        gate = GateSpec.from_name(name)
        ttraj = target_trajectory(gate.theta, OMEGA)
        residuals.append(parallel_transport_residual(ttraj))
        integrals.append(abs(super_robust_integral(ttraj)))
    # the composite's three phase factors sum to zero by symmetry
    identity = abs(0.5 * math.pi * sum(cmath.exp(-1j * k * 2.0 * math.pi / 3.0) for k in range(3)))
    elapsed = time.perf_counter() - t0
    ok = (
        max(residuals) == 0.0
        and max(integrals) <= 1e-10
        and identity < 1e-15
        and elapsed < 1.0
    )
    report("1", ok, f"pt residual {max(residuals):.1e}, sr integral {max(integrals):.2e}, "
                    f"phase-sum identity {identity:.1e}, {elapsed:.2f} s")
    assert max(residuals) == 0.0
    assert max(integrals) <= 1e-10
    assert identity < 1e-15
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# 2. phase functionals


def test_criterion_02_phase_functionals():
    t0 = time.perf_counter()
    cfg = scenario()
    model = cfg.model
    space = model.space()
    target = target_schedules(cfg.gate.theta, cfg.gate.phi, OMEGA)
    v0 = float(model.v_values(np.array([0.0]))[0])
    t_end = target.duration

    def drifting(t):
        # the pair distance closes linearly by 5% over the pulse
        return v0 / (1.0 - 0.05 * np.asarray(t) / t_end) ** 3

    # the integrands are analytic zeros; a coarse grid keeps this under budget
    n = 301
    values = {
        "dark const": abs(dark_state_phase_integral(
            target, model, cfg.gate.theta, cfg.gate.phi, space, n_per_segment=n)),
        "exchange const": abs(ground_exchange_phase_integral(target, model, n_per_segment=n)),
        "dark drifting": abs(dark_state_phase_integral(
            target, model._replace_v(drifting), cfg.gate.theta, cfg.gate.phi, space, n_per_segment=n)),
        "exchange drifting": abs(ground_exchange_phase_integral(
            target, model._replace_v(drifting), n_per_segment=n)),
    }
    elapsed = time.perf_counter() - t0
    worst = max(values.values())
    ok = worst <= 1e-8 and elapsed < 1.0
    report("2", ok, f"worst phase functional {worst:.2e} (limit 1e-8), {elapsed:.2f} s")
    assert worst <= 1e-8
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# 3. closed-system gate action


def test_criterion_03_closed_system_fidelity():
    details = []
    ok = True
    for name in GATES:
        t0 = time.perf_counter()
        f = fidelity_of(scenario(name, rates=DissipationRates.zero()))
        dt = time.perf_counter() - t0
        details.append(f"{name} {f:.7f} ({dt:.1f} s)")
        ok = ok and f >= 0.999 and dt < 10.0
        assert f >= 0.999, name
        assert dt < 10.0, name
    report("3", ok, ", ".join(details))


# ---------------------------------------------------------------------------
# 4. dissipative fidelities of the three schemes


def test_criterion_04_dissipative_fidelities():
    f_super = fidelity_of(scenario("CZ"))
    f_dark = fidelity_of(scenario("CZ", scheme="dark_state"))
    f_block = fidelity_of(scenario("CZ", scheme="blockade"))
    windows = ((f_super, 0.9915), (f_dark, 0.9975), (f_block, 0.9982))
    in_windows = all(abs(f - target) <= 0.004 for f, target in windows)
    ordered = f_block > f_dark > f_super
    ok = in_windows and ordered
    report("4", ok, f"super {f_super:.5f} (0.9915+-0.004), dark {f_dark:.5f} (0.9975+-0.004), "
                    f"blockade {f_block:.5f} (0.9982+-0.004), ordering {'holds' if ordered else 'broken'}")
    for f, target in windows:
        assert abs(f - target) <= 0.004
    assert ordered


# ---------------------------------------------------------------------------
# 5. robustness at large amplitude errors


@pytest.mark.xfail(
    strict=True,
    reason="the published four-quarter pulse carries an exact second-order bright-branch "
    "phase error (pi^2/2) eps^2, costing ~3.65 eps^4 coherent infidelity; 0.99 at "
    "eps = 0.2 is out of reach (measured 0.983; decisions ledger D4)",
)
def test_criterion_05a_super_robust_at_20_percent():
    t0 = time.perf_counter()
    f = fidelity_of(scenario("CZ", xi=0.2, epsilon=0.2))
    elapsed = time.perf_counter() - t0
    report("5a", f >= 0.99, f"super-robust CZ at xi=eps=0.2: {f:.5f} (claim >= 0.99), {elapsed:.0f} s")
    assert elapsed < 60.0
    assert f >= 0.99


def test_criterion_05b_baselines_collapse_at_20_percent():
    t0 = time.perf_counter()
    f_dark = fidelity_of(scenario("CZ", scheme="dark_state", xi=0.2, epsilon=0.2))
    f_block = fidelity_of(scenario("CZ", scheme="blockade", xi=0.2, epsilon=0.2))
    elapsed = time.perf_counter() - t0
    ok = f_dark <= 0.96 and f_block <= 0.96
    report("5b", ok, f"baselines at xi=eps=0.2: dark {f_dark:.4f}, blockade {f_block:.4f} "
                     f"(claim <= 0.96 each), {elapsed:.0f} s")
    assert elapsed < 120.0
    assert f_dark <= 0.96
    assert f_block <= 0.96


@pytest.mark.xfail(
    strict=True,
    reason="at eps = 0.4 the bright-branch phase error reaches 0.54 rad and the "
    "return probability 0.78; measured 0.881 (decisions ledger D4)",
)
def test_criterion_05c_super_robust_at_40_percent():
    t0 = time.perf_counter()
    f = fidelity_of(scenario("CZ", xi=0.4, epsilon=0.4))
    elapsed = time.perf_counter() - t0
    report("5c", f >= 0.96, f"super-robust CZ at xi=eps=0.4: {f:.5f} (claim >= 0.96), {elapsed:.0f} s")
    assert elapsed < 60.0
    assert f >= 0.96


# ---------------------------------------------------------------------------
# 6. blockade resilience at V comparable to the drive


def test_criterion_06_small_interaction_grid():
    t0 = time.perf_counter()
    small_v = AtomPairModel(V=TWO_PI * 8.0)
    grid = np.linspace(0.0, 0.2, 5)
    margins = []
    for xi in grid:
        for eps in grid:
            f_sr = fidelity_of(scenario("CZ", model=small_v, omega_max=TWO_PI * 8.0,
                                        xi=float(xi), epsilon=float(eps)))
            f_bl = fidelity_of(scenario("CZ", scheme="blockade", model=small_v,
                                        omega_max=TWO_PI * 8.0, xi=float(xi), epsilon=float(eps)))
            margins.append(f_sr - f_bl)
    elapsed = time.perf_counter() - t0
    worst = min(margins)
    ok = worst > 0.0 and elapsed < 900.0
    report("6", ok, f"super-robust beats blockade at all 25 points of the (xi, eps) grid "
                    f"at V = 2pi x 8 MHz; min margin {worst:+.4f}, {elapsed:.0f} s")
    assert worst > 0.0
    assert elapsed < 900.0


# ---------------------------------------------------------------------------
# 7. leakage probabilities of the doubly-excited manifold


LEAKAGE_TABLE = {
    # gate: (max, mean), both absolute probabilities
    "CZ": (8.08e-5, 3.01e-5),
    "CNOT": (8.11e-5, 3.02e-5),
    "CHadamard": (8.05e-5, 3.01e-5),
}


def test_criterion_07_leakage_table():
    channels = (
        LeakageChannel("R'r", 120.0, TWO_PI * 65.0),
        LeakageChannel("r'R", 156.8, TWO_PI * 190.0),
    )
    model = AtomPairModel.from_geometry(TWO_PI * 64.4e3, 6.0, leakage=channels)
    t0 = time.perf_counter()
    details = []
    ok = True
    for name, (want_max, want_mean) in LEAKAGE_TABLE.items():
        rep = leakage_probability(scenario(name, model=model))
        good = (abs(rep.max_probability - want_max) <= 0.1 * want_max
                and abs(rep.mean_probability - want_mean) <= 0.1 * want_mean)
        ok = ok and good
        details.append(f"{name} {rep.max_probability:.3e}/{rep.mean_probability:.3e}")
        assert abs(rep.max_probability - want_max) <= 0.1 * want_max, name
        assert abs(rep.mean_probability - want_mean) <= 0.1 * want_mean, name
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60.0
    report("7", ok, f"max/mean leakage within 10% of the table: {', '.join(details)}, {elapsed:.0f} s")
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# 8. effective drive against the full two-photon ladder


@pytest.fixture(scope="module")
def ladder_comparison():
    """Full-ladder vs effective CNOT at the ends of the control-error range.

    The difference is step-density independent to ~5e-4 across 0.12, 0.24
    and 0.36 rad of intermediate-state phase per step, and to 5e-6 between
    0.36 and 0.48, so the coarse setting serves the runtime budget.
    """
    ladder = TwoPhotonLadder(TWO_PI * 245.0, TWO_PI * 80.0, TWO_PI * 1225.0)
    model = AtomPairModel.from_geometry(TWO_PI * 64.4e3, 6.0, ladder=ladder)
    mp = pytest.MonkeyPatch()
    mp.setattr("geomgate.protocols.LADDER_PHASE_PER_STEP", 0.48)
    t0 = time.perf_counter()
    points = []
    try:
        for xi in (0.0, 0.2):
            f_eff = fidelity_of(scenario("CNOT", model=model, xi=xi))
            f_full = fidelity_of(scenario("CNOT", model=model, xi=xi, excitation="full"))
            points.append((xi, f_eff, f_full))
    finally:
        mp.undo()
    return points, time.perf_counter() - t0


def test_criterion_08_runtime_and_sanity(ladder_comparison):
    points, elapsed = ladder_comparison
    assert len(points) == 2
    for xi, f_eff, f_full in points:
        assert 0.0 < f_full < f_eff <= 1.0
    assert elapsed < 600.0


@pytest.mark.xfail(
    strict=True,
    reason="the constant-envelope composite switches on/off and jumps phase at full "
    "amplitude; each hard edge is diabatic for the intermediate-state dressing "
    "(amplitude 0.1 on the P level), and its decay scatters several percent per "
    "control-excited input. Measured gap ~0.064, budget 0.01 (decisions ledger D9)",
)
def test_criterion_08_full_ladder_gap(ladder_comparison):
    points, elapsed = ladder_comparison
    gaps = [f_eff - f_full for _, f_eff, f_full in points]
    detail = ", ".join(
        f"xi={xi:.1f}: eff {f_eff:.5f} full {f_full:.5f} (gap {f_eff - f_full:.4f})"
        for xi, f_eff, f_full in points
    )
    report("8", max(gaps) <= 0.01, f"{detail}, {elapsed:.0f} s")
    # frozen single-point diagnostic: with the intermediate decay switched off
    # the full-ladder CNOT reaches 0.9468, splitting the ~0.064 gap into
    # ~0.045 coherent (hard-edge dressing) + ~0.018 scattering
    print("criterion 8 note: gamma_P = 0 diagnostic measured separately: F_full = 0.9468")
    assert max(gaps) <= 0.01


# ---------------------------------------------------------------------------
# 9. motion dephasing with and without the echo


def test_criterion_09_doppler_windows():
    runs = {}
    for temp in (10.0, 35.0):
        for echo in (True, False):
            cfg = scenario("CNOT", doppler=DopplerModel(temperature_uK=temp, echo=echo))
            runs[(temp, echo)] = fidelity_of(cfg)
    windows = {
        (10.0, True): (0.97, 0.015),
        (10.0, False): (0.93, 0.015),
        (35.0, True): (0.90, 0.02),
        (35.0, False): (0.80, 0.03),
    }
    in_windows = all(abs(runs[k] - c) <= w for k, (c, w) in windows.items())
    echo_wins = all(runs[(t, True)] >= runs[(t, False)] for t in (10.0, 35.0))
    colder_wins = all(runs[(10.0, e)] >= runs[(35.0, e)] for e in (True, False))
    ok = in_windows and echo_wins and colder_wins
    detail = ", ".join(
        f"{int(t)} uK {'echo' if e else 'free'}: {runs[(t, e)]:.4f}" for (t, e) in runs
    )
    report("9", ok, f"{detail}; windows "
                    f"{'hit' if in_windows else 'missed'}, echo>=free {echo_wins}, cooling helps {colder_wins}")
    for key, (center, width) in windows.items():
        assert abs(runs[key] - center) <= width, key
    assert echo_wins
    assert colder_wins


# ---------------------------------------------------------------------------
# 10. random per-step velocities


def test_criterion_10_gaussian_velocity_means():
    t0 = time.perf_counter()
    means = {}
    for err, (center, width) in ((0.1, (0.955, 0.015)), (0.2, (0.934, 0.02))):
        values = []
        for seed in range(20):
            cfg = scenario(
                "CNOT",
                xi=err,
                epsilon=err,
                doppler=DopplerModel(temperature_uK=10.0, echo=True, velocity="gaussian"),
                seed=seed,
            )
            values.append(fidelity_of(cfg))
        means[err] = float(np.mean(values))
        assert abs(means[err] - center) <= width, err
    elapsed = time.perf_counter() - t0
    ok = elapsed < 1200.0
    report("10", ok, f"20-seed means: {means[0.1]:.4f} at 10% error (0.955+-0.015), "
                     f"{means[0.2]:.4f} at 20% (0.934+-0.02), {elapsed:.0f} s")
    assert elapsed < 1200.0


# ---------------------------------------------------------------------------
# 11. reduced drive and interaction


@pytest.mark.xfail(
    strict=True,
    reason="same second-order bright-branch error as criterion 5, amplified by the "
    "smaller V/Omega ratio; measured 0.971/0.976/0.972 vs claims 0.978/0.98/0.98 "
    "(decisions ledger D4)",
)
def test_criterion_11_reduced_parameter_regime():
    t0 = time.perf_counter()
    results = {}
    for name in GATES:
        cfg = scenario(
            name,
            omega_max=TWO_PI * 3.5,
            model=AtomPairModel(V=TWO_PI * 24.0),
            xi=0.2,
            epsilon=0.2,
            rri_fluctuation=0.2,
        )
        results[name] = fidelity_of(cfg)
    elapsed = time.perf_counter() - t0
    floors = {"CZ": 0.978, "CNOT": 0.98, "CHadamard": 0.98}
    ok = all(results[g] >= floors[g] for g in GATES)
    report("11", ok, ", ".join(f"{g} {results[g]:.4f} (claim >= {floors[g]})" for g in GATES)
                     + f", {elapsed:.0f} s")
    assert elapsed < 300.0
    for g in GATES:
        assert results[g] >= floors[g], g


# ---------------------------------------------------------------------------
# 12. numerics


def test_criterion_12_numerics():
    out = convergence_report(scenario("CZ"))
    assert out["delta"] < 1e-6

    # Lindblad invariants on stored snapshots of the default dissipative run
    plan = build_protocol(scenario("CZ"))
    idx = plan.space.computational_indices()
    psi = np.zeros(plan.space.dim, dtype=complex)
    psi[idx] = 0.5
    rho = np.outer(psi, psi.conj())
    worst_eig = 0.0
    for step in plan.steps:
        res = propagate_density(
            step.hamiltonian, rho, step.channels, step.duration, step.n_steps,
            hermitize=True, check_positivity=True, store_every=100,
        )
        rho = res.final
        assert res.max_trace_drift < 1e-9
        assert res.max_hermiticity_defect < 1e-12
        worst_eig = min(worst_eig, res.min_eigenvalue)
        assert res.min_eigenvalue > -1e-6

    f_dep = average_gate_fidelity(depolarizing_channel(), np.eye(4))
    assert abs(f_dep - 0.25) <= 1e-12

    rng = np.random.default_rng(2024)
    for _ in range(1000):
        omega = rng.uniform(0.1, 10.0)
        delta = omega / rng.uniform(0.01, 0.3)
        t = rng.uniform(0.0, 10.0)
        assert excitation_probability_exact(omega, delta, t) <= (omega / delta) ** 2 + 1e-15

    report("12", True, f"refinement delta {out['delta']:.2e} (< 1e-6), snapshot invariants hold "
                       f"(min eigenvalue {worst_eig:.1e}), depolarizing anchor == 0.25, "
                       f"1000/1000 excitation samples below the bound")


# ---------------------------------------------------------------------------
# 13. figures package renders the shipped data


def test_criterion_13_figures_render(tmp_path):
    gatefigs = pytest.importorskip("gatefigs", reason="figures package not installed")
    heat_csv = DATA_DIR / "robustness_sweep.csv"
    line_csv = DATA_DIR / "temperature_scan.csv"
    if not heat_csv.exists() or not line_csv.exists():
        pytest.skip("shipped sweep data not present")

    heat_out = tmp_path / "heatmap.png"
    code = gatefigs.cli.main([
        "heatmap", "--csv", str(heat_csv), "--out", str(heat_out),
        "--x", "xi", "--y", "epsilon", "--z", "avg_fidelity",
    ])
    assert code == 0
    assert heat_out.exists() and heat_out.stat().st_size > 0

    lines_out = tmp_path / "lines.png"
    code = gatefigs.cli.main([
        "lines", "--csv", str(line_csv), "--out", str(lines_out),
        "--x", "temperature_uK", "--y", "avg_fidelity", "--series", "spin_echo",
    ])
    assert code == 0
    assert lines_out.exists() and lines_out.stat().st_size > 0

    # the claim behind the figure: echo above no-echo at every temperature
    from geomgate.sweep import read_csv_rows

    rows = read_csv_rows(str(line_csv))
    by_temp = {}
    for r in rows:
        by_temp.setdefault(r["temperature_uK"], {})[r["spin_echo"]] = r["avg_fidelity"]
    assert by_temp
    assert all(v[True] >= v[False] for v in by_temp.values())
    grid = sorted({r["xi"] for r in read_csv_rows(str(heat_csv))})
    ok = len(grid) == 21
    report("13", ok, f"heatmap ({len(grid)}x{len(grid)} grid) and echo/no-echo lines rendered")
    assert ok
