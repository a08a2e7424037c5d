"""Command line front end.

Verbs:
  simulate          run one configured gate, write a one-row result CSV
  sweep             Cartesian parameter sweep, parallel and deterministic
  check-pulses      pulse-condition / phase-functional / convergence table
  leakage           pair-state leakage probability during the target pulse
  excitation-error  off-resonant Rydberg excitation budget from a channel table

Exit codes: 0 success, 1 a check failed, 2 bad configuration (with the JSON
path of the offending field), 3 propagation failure, 4 file I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib.metadata import PackageNotFoundError, version as pkg_version

import numpy as np

from .config import SCHEMA_VERSION, ConfigError, config_summary, load_config
from .metrics import (
    ExcitationChannel,
    convergence_report,
    dump_population_csv,
    excitation_error,
    leakage_probability,
    population_trace,
)
from .propagate import (
    ADIABATIC_RATIO_FLAG,
    PropagationError,
    adiabaticity_margin,
    control_geometric_phase,
    dark_state_phase_integral,
    ground_exchange_phase_integral,
)
from .protocols import GateSpec, ScenarioConfig
from .pulses import (
    TWO_PI,
    control_schedule,
    control_trajectory,
    parallel_transport_residual,
    super_robust_integral,
    target_schedules,
    target_trajectory,
)
from .sweep import CsvIoError, SweepAxis, SweepAxisError, emit_csv, run_scenario, run_sweep

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_PROPAGATION = 3
EXIT_IO = 4


def _package_version() -> str:
    try:
        return pkg_version("geomgate")
    except PackageNotFoundError:
        return "unknown"


def _load(path: str) -> ScenarioConfig:
    return load_config(path)


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    row = run_scenario(cfg)
    emit_csv([row], args.out, normalize_runtime=not args.keep_runtimes)
    print(f"{cfg.scheme} {cfg.gate.name}: avg_fidelity = {row.avg_fidelity:.6f} "
          f"(trace deficit {row.trace_deficit:.3g}, {row.runtime_s:.1f} s)")
    if args.trace_out:
        trace = population_trace(cfg)
        dump_population_csv(trace, args.trace_out)
        print(f"population trace written to {args.trace_out} "
              f"(state fidelity {trace.final_state_fidelity:.6f})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    try:
        axes = [SweepAxis.parse(a) for a in args.axis]
    except SweepAxisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = run_sweep(cfg, axes, master_seed=args.seed, jobs=args.jobs, log=sys.stderr)
    emit_csv(rows, args.out, normalize_runtime=not args.keep_runtimes)
    failed = [r for r in rows if r.status != "ok"]
    print(f"{len(rows)} rows written to {args.out}" + (f", {len(failed)} failed" if failed else ""))
    return EXIT_OK


class CheckTable:
    def __init__(self):
        self.rows = []

    def add(self, name: str, value: float, threshold: float, ok: bool | None = None):
        if ok is None:
            ok = abs(value) <= threshold
        self.rows.append((name, value, threshold, ok))
        return ok

    def print(self):
        width = max(len(r[0]) for r in self.rows) + 2
        for name, value, threshold, ok in self.rows:
            verdict = "pass" if ok else "FAIL"
            print(f"  {name:<{width}} {value: .3e}  (limit {threshold:.0e})  {verdict}")

    @property
    def all_ok(self) -> bool:
        return all(r[3] for r in self.rows)


def cmd_check_pulses(args) -> int:
    cfg = _load(args.config) if args.config else ScenarioConfig(gate=GateSpec.from_name("CZ"))
    omega = cfg.omega_max
    gate = cfg.gate
    model = cfg.effective_model()
    space = model.space()

    table = CheckTable()
    ctraj = control_trajectory(omega)
    ttraj = target_trajectory(gate.theta, omega)
    table.add("parallel transport residual (control)", parallel_transport_residual(ctraj), 1e-12)
    table.add("parallel transport residual (target)", parallel_transport_residual(ttraj), 1e-12)
    table.add("super-robust integral (control)", abs(super_robust_integral(ctraj)), 1e-10)
    table.add("super-robust integral (target)", abs(super_robust_integral(ttraj)), 1e-10)

    target = target_schedules(gate.theta, gate.phi, omega)
    margin = adiabaticity_margin(target.bright, model)
    table.add("adiabatic slew ratio", margin["ratio"], ADIABATIC_RATIO_FLAG)

    table.add("dynamical phase of the pair dark state",
              dark_state_phase_integral(target, model, gate.theta, gate.phi, space), 1e-8)
    table.add("ground-pair exchange phase (constant V)",
              ground_exchange_phase_integral(target, model), 1e-8)
    v0 = float(model.v_values(np.array([0.0]))[0])
    drifting = model._replace_v(_linear_drift_v(v0, target.bright.duration))
    table.add("ground-pair exchange phase (drifting V)",
              ground_exchange_phase_integral(target, drifting), 1e-8)

    phases = control_geometric_phase(control_schedule(omega), space)
    table.add("dynamical phase of the control path", phases["dynamical"], 1e-8)

    if args.convergence:
        report = convergence_report(cfg)
        table.add("fidelity change on step refinement", report["delta"], 1e-6)

    table.print()
    if not table.all_ok:
        return EXIT_CHECK_FAILED
    print("all checks passed")
    return EXIT_OK


def _linear_drift_v(v0: float, t_end: float):
    """V(t) = C3/d(t)^3 with the distance shrinking linearly by 5% over the pulse."""

    def v_of_t(t):
        d_rel = 1.0 - 0.05 * np.asarray(t) / t_end
        return v0 / d_rel**3

    return v_of_t


def cmd_leakage(args) -> int:
    cfg = _load(args.config)
    report = leakage_probability(cfg)
    print(f"max leakage probability      {report.max_probability:.3e}")
    print(f"time-averaged probability    {report.mean_probability:.3e}")
    return EXIT_OK


def cmd_excitation_error(args) -> int:
    try:
        with open(args.channels) as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read {args.channels}: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: {args.channels} is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        omega = TWO_PI * float(doc["omega_MHz_over_2pi"])
        groups = doc["groups"]
    except (KeyError, TypeError) as exc:
        print(f"error: channel table needs omega_MHz_over_2pi and groups: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    grand_total = 0.0
    for group in groups:
        channels = [
            ExcitationChannel(delta=TWO_PI * float(c["delta_MHz_over_2pi"]),
                              dipole_ratio=float(c["dipole_ratio"]))
            for c in group.get("channels", [])
        ]
        result = excitation_error(channels, omega, int(group["pulse_multiplicity"]))
        print(f"{group.get('name', 'atom')}: {len(channels)} channels, "
              f"x = {group['pulse_multiplicity']}")
        for ch, exact, bound in zip(
            channels, result["per_channel_exact"], result["per_channel_bound"]
        ):
            print(f"  delta = 2pi x {ch.delta / TWO_PI:8.2f} MHz  ratio {ch.dipole_ratio:5.3f}  "
                  f"exact {exact:.3e}  bound {bound:.3e}")
        print(f"  group total (x * sum of bounds): {result['total_bound']:.3e}")
        grand_total += result["total_bound"]
    print(f"total excitation error: {grand_total:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geomgate",
        description="Pulse-level simulator for super-robust geometric two-qubit Rydberg gates.",
    )
    parser.add_argument("--version", action="version",
                        version=f"geomgate {_package_version()} (config schema {SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configured gate")
    p.add_argument("--config", required=True, help="JSON scenario configuration")
    p.add_argument("--out", required=True, help="result CSV path")
    p.add_argument("--trace-out", help="optional population-trajectory CSV")
    p.add_argument("--keep-runtimes", action="store_true",
                   help="record wall time instead of normalizing it to 0")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Cartesian parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", action="append", required=True, metavar="NAME=START:STOP:COUNT",
                   help="sweep axis; repeat for a grid; also NAME=v1,v2,...")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="master seed; per-point seeds derive from it")
    p.add_argument("--out", required=True)
    p.add_argument("--keep-runtimes", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check-pulses", help="pulse-condition and phase-functional checks")
    p.add_argument("--config", help="optional scenario (defaults to the standard CZ)")
    p.add_argument("--convergence", action="store_true",
                   help="also rerun the scenario at doubled resolution (slow)")
    p.set_defaults(func=cmd_check_pulses)

    p = sub.add_parser("leakage", help="pair-state leakage probability")
    p.add_argument("--config", required=True, help="scenario with leakage channels in the model")
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("excitation-error", help="off-resonant excitation budget")
    p.add_argument("--channels", required=True, help="JSON channel table")
    p.set_defaults(func=cmd_excitation_error)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PropagationError as exc:
        print(f"propagation failure: {exc}", file=sys.stderr)
        return EXIT_PROPAGATION
    except CsvIoError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
