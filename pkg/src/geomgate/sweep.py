"""Deterministic parameter sweeps with a stable CSV contract.

Every sweep point derives its own seed from (master seed, point index)
through numpy's SeedSequence, so results do not depend on scheduling:
running with one worker or eight produces byte-identical output.  Wall
times are measured for logging but normalized to zero in the CSV for the
same reason.

Points that fail are recorded in their row with a status message and the
sweep continues.
"""

from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .config import config_summary
from .metrics import average_gate_fidelity, channel_deficits
from .model import DopplerModel
from .propagate import PropagationError
from .protocols import ScenarioConfig, run_channel
from .pulses import TWO_PI

AXIS_PARAMETERS = ("xi", "epsilon", "V", "temperature", "rri_fluctuation")


class SweepAxisError(ValueError):
    pass


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.parameter not in AXIS_PARAMETERS:
            raise SweepAxisError(f"unknown sweep parameter {self.parameter!r}; choose from {AXIS_PARAMETERS}")
        if not self.values:
            raise SweepAxisError("axis needs at least one value")

    @classmethod
    def parse(cls, text: str) -> "SweepAxis":
        """ 'xi=0:0.2:21' (inclusive grid) or 'xi=0,0.1,0.2' (explicit). """
        if "=" not in text:
            raise SweepAxisError(f"axis {text!r} is not NAME=START:STOP:COUNT or NAME=v1,v2,...")
        name, _, spec = text.partition("=")
        name = name.strip()
        spec = spec.strip()
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise SweepAxisError(f"grid spec {spec!r} must be START:STOP:COUNT")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise SweepAxisError("grid needs at least one point")
            values = tuple(float(v) for v in np.linspace(start, stop, count))
        else:
            values = tuple(float(v) for v in spec.split(","))
        return cls(name, values)


@dataclass
class ResultRow:
    scheme: str
    gate: str
    xi: float
    epsilon: float
    V_MHz_over_2pi: float
    temperature_uK: float
    spin_echo: bool
    rri_fluctuation: float
    seed: int
    avg_fidelity: float
    max_leakage: float
    trace_deficit: float
    runtime_s: float
    status: str = "ok"


RESULT_FIELDS = [f.name for f in fields(ResultRow)]


def run_scenario(cfg: ScenarioConfig) -> ResultRow:
    """Run one configured gate and reduce it to a result row."""
    summary = config_summary(cfg)
    started = time.perf_counter()
    channel, diag = run_channel(cfg)
    runtime = time.perf_counter() - started
    fidelity = average_gate_fidelity(channel, diag.ideal)
    max_leak, deficit = channel_deficits(channel)
    return ResultRow(
        scheme=cfg.scheme,
        gate=cfg.gate.name,
        xi=cfg.xi,
        epsilon=cfg.epsilon,
        V_MHz_over_2pi=summary["V_MHz_over_2pi"],
        temperature_uK=summary["temperature_uK"],
        spin_echo=summary["spin_echo"],
        rri_fluctuation=cfg.rri_fluctuation,
        seed=cfg.seed,
        avg_fidelity=min(max(fidelity, 0.0), 1.0),
        max_leakage=max_leak,
        trace_deficit=deficit,
        runtime_s=runtime,
    )


def apply_axis_value(cfg: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    if parameter == "xi":
        return replace(cfg, xi=value)
    if parameter == "epsilon":
        return replace(cfg, epsilon=value)
    if parameter == "rri_fluctuation":
        return replace(cfg, rri_fluctuation=value)
    if parameter == "V":
        return replace(cfg, model=cfg.model._replace_v(TWO_PI * value))
    if parameter == "temperature":
        if cfg.doppler is None:
            base = DopplerModel(temperature_uK=value)
        else:
            base = replace(cfg.doppler, temperature_uK=value)
        return replace(cfg, doppler=base)
    raise SweepAxisError(f"unknown sweep parameter {parameter!r}")


def point_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1)[0])


def _run_point(args) -> ResultRow:
    index, cfg = args
    try:
        return run_scenario(cfg)
    except PropagationError as exc:
        row = _failed_row(cfg, f"propagation: {exc}")
        return row
    except Exception as exc:  # keep the sweep alive, record the reason
        return _failed_row(cfg, f"{type(exc).__name__}: {exc}")


def _failed_row(cfg: ScenarioConfig, status: str) -> ResultRow:
    summary = config_summary(cfg)
    return ResultRow(
        scheme=cfg.scheme,
        gate=cfg.gate.name,
        xi=cfg.xi,
        epsilon=cfg.epsilon,
        V_MHz_over_2pi=summary["V_MHz_over_2pi"],
        temperature_uK=summary["temperature_uK"],
        spin_echo=summary["spin_echo"],
        rri_fluctuation=cfg.rri_fluctuation,
        seed=cfg.seed,
        avg_fidelity=float("nan"),
        max_leakage=float("nan"),
        trace_deficit=float("nan"),
        runtime_s=0.0,
        status=status,
    )


def sweep_points(base: ScenarioConfig, axes: list[SweepAxis], master_seed: int) -> list[ScenarioConfig]:
    """Cartesian product of the axes in the given order, seeds derived per point."""
    configs = []
    for index, combo in enumerate(itertools.product(*(ax.values for ax in axes))):
        cfg = base
        for ax, value in zip(axes, combo):
            cfg = apply_axis_value(cfg, ax.parameter, value)
        cfg = replace(cfg, seed=point_seed(master_seed, index))
        configs.append(cfg)
    return configs


def run_sweep(
    base: ScenarioConfig,
    axes: list[SweepAxis],
    master_seed: int = 0,
    jobs: int = 1,
    log=None,
) -> list[ResultRow]:
    """Run the whole grid; row order follows the point index regardless of jobs."""
    configs = sweep_points(base, axes, master_seed)
    tasks = list(enumerate(configs))
    if jobs <= 1 or len(tasks) <= 1:
        rows = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_point, tasks, chunksize=1))
    if log is not None:
        done = sum(1 for r in rows if r.status == "ok")
        total_s = sum(r.runtime_s for r in rows)
        print(f"sweep: {done}/{len(rows)} points ok, {total_s:.1f} s of solver time", file=log)
    return rows


# ---------------------------------------------------------------------------
# CSV contract


class CsvIoError(OSError):
    pass


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def emit_csv(rows: list[ResultRow], path: str, normalize_runtime: bool = True) -> None:
    """Write rows in field order with 9 significant digits.

    runtime_s is zeroed by default so that repeated runs of the same sweep
    are byte-identical; pass normalize_runtime=False to keep measurements.
    """
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULT_FIELDS)
            for row in rows:
                values = []
                for name in RESULT_FIELDS:
                    v = getattr(row, name)
                    if name == "runtime_s" and normalize_runtime:
                        v = 0.0
                    values.append(_format_value(v))
                writer.writerow(values)
    except OSError as exc:
        raise CsvIoError(f"cannot write {path}: {exc}") from exc


def read_csv_rows(path: str) -> list[dict]:
    """Parse a result CSV back into dictionaries with typed values."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            row = dict(raw)
            for key in ("xi", "epsilon", "V_MHz_over_2pi", "temperature_uK", "rri_fluctuation",
                        "avg_fidelity", "max_leakage", "trace_deficit", "runtime_s"):
                row[key] = float(row[key])
            row["seed"] = int(row["seed"])
            row["spin_echo"] = row["spin_echo"] == "true"
            rows.append(row)
    return rows
