"""JSON scenario configuration: schema validation and unit conversion.

External files carry laboratory units (MHz over 2pi, kHz over 2pi,
GHz um^3, uK); everything is converted to rad/us and us on load.  The
schema rejects unknown keys so typos fail loudly rather than silently
falling back to defaults.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import jsonschema

from .model import (
    AtomPairModel,
    DissipationRates,
    DopplerModel,
    LeakageChannel,
    TwoPhotonLadder,
)
from .protocols import GateSpec, ScenarioConfig
from .pulses import TWO_PI

SCHEMA_VERSION = "1"

DEFAULT_C3_GHZ_UM3 = 64.4
DEFAULT_DISTANCE_UM = 6.0


class ConfigError(ValueError):
    """Configuration file violates the schema; path points at the field."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


def _load_schema() -> dict:
    with resources.files("geomgate.schemas").joinpath("config.schema.json").open() as fh:
        return json.load(fh)


def mhz(value: float) -> float:
    """MHz over 2pi to rad/us."""
    return TWO_PI * value


def khz(value: float) -> float:
    return TWO_PI * 1e-3 * value


def ghz_um3(value: float) -> float:
    """GHz um^3 over 2pi to rad um^3 / us."""
    return TWO_PI * 1e3 * value


def validate_config_dict(raw: dict) -> None:
    validator = jsonschema.Draft202012Validator(_load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(err.message, err.json_path)


def _gate_from(raw) -> GateSpec:
    if isinstance(raw, str):
        return GateSpec.from_name(raw)
    return GateSpec.custom(float(raw["theta_rad"]), float(raw["phi_rad"]))


def _model_from(raw: dict, ladder: TwoPhotonLadder | None) -> AtomPairModel:
    model_raw = raw.get("model", {})
    leakage = tuple(
        LeakageChannel(
            source=ch["source"],
            coupling=ch["coupling_rad_per_us"],
            detuning=mhz(ch["detuning_MHz_over_2pi"]),
        )
        for ch in model_raw.get("leakage_channels", [])
    )
    v_given = "V_MHz_over_2pi" in model_raw
    c3_given = "C3_GHz_um3" in model_raw or "distance_um" in model_raw
    if v_given and c3_given:
        raise ConfigError("give either V_MHz_over_2pi or the C3/distance pair, not both", "$.model")
    if v_given:
        return AtomPairModel(V=mhz(model_raw["V_MHz_over_2pi"]), leakage=leakage, ladder=ladder)
    c3 = ghz_um3(model_raw.get("C3_GHz_um3", DEFAULT_C3_GHZ_UM3))
    dist = model_raw.get("distance_um", DEFAULT_DISTANCE_UM)
    return AtomPairModel.from_geometry(c3, dist, leakage=leakage, ladder=ladder)


def _rates_from(raw: dict) -> DissipationRates:
    if "dissipation" in raw and raw["dissipation"] is None:
        return DissipationRates.zero()
    d = raw.get("dissipation", {})
    defaults = DissipationRates()

    def rate(key: str, default: float) -> float:
        return khz(d[key]) if key in d else default

    return DissipationRates(
        decay_Rp=rate("decay_Rp_kHz_over_2pi", defaults.decay_Rp),
        decay_rp=rate("decay_rp_kHz_over_2pi", defaults.decay_rp),
        decay_R=rate("decay_R_kHz_over_2pi", defaults.decay_R),
        decay_r=rate("decay_r_kHz_over_2pi", defaults.decay_r),
        dephasing_Rp=rate("dephasing_Rp_kHz_over_2pi", defaults.dephasing_Rp),
        dephasing_rp=rate("dephasing_rp_kHz_over_2pi", defaults.dephasing_rp),
        dephasing_R=rate("dephasing_R_kHz_over_2pi", defaults.dephasing_R),
        dephasing_r=rate("dephasing_r_kHz_over_2pi", defaults.dephasing_r),
    )


def _doppler_from(raw: dict) -> DopplerModel | None:
    d = raw.get("doppler")
    if d is None:
        return None
    kwargs = {"temperature_uK": float(d["temperature_uK"])}
    if "k_eff_rad_per_um" in d:
        kwargs["k_eff"] = float(d["k_eff_rad_per_um"])
    if "echo" in d:
        kwargs["echo"] = bool(d["echo"])
    if "velocity" in d:
        kwargs["velocity"] = d["velocity"]
    if "mass_kg" in d:
        kwargs["mass_kg"] = float(d["mass_kg"])
    return DopplerModel(**kwargs)


def _ladder_from(raw: dict) -> tuple[str, TwoPhotonLadder | None]:
    exc = raw.get("excitation", {"mode": "effective"})
    mode = exc["mode"]
    if mode == "effective":
        return mode, None
    needed = ("omega_r_MHz_over_2pi", "omega_b_MHz_over_2pi", "delta_MHz_over_2pi")
    missing = [k for k in needed if k not in exc]
    if missing:
        raise ConfigError(f"full excitation mode needs {missing}", "$.excitation")
    return mode, TwoPhotonLadder(
        omega_r=mhz(exc["omega_r_MHz_over_2pi"]),
        omega_b=mhz(exc["omega_b_MHz_over_2pi"]),
        delta=mhz(exc["delta_MHz_over_2pi"]),
        gamma_p=mhz(exc.get("gamma_p_MHz_over_2pi", 3.2)),
        stark_compensation=exc.get("stark_compensation", True),
    )


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Validate a raw JSON document and build the runtime configuration."""
    validate_config_dict(raw)
    mode, ladder = _ladder_from(raw)
    drive = raw.get("drive", {})
    integrator = raw.get("integrator", {})
    try:
        return ScenarioConfig(
            gate=_gate_from(raw["gate"]),
            scheme=raw.get("scheme", "super_robust"),
            omega_max=mhz(drive.get("omega_max_MHz_over_2pi", 8.0)),
            xi=float(drive.get("xi", 0.0)),
            epsilon=float(drive.get("epsilon", 0.0)),
            model=_model_from(raw, ladder),
            rates=_rates_from(raw),
            doppler=_doppler_from(raw),
            excitation=mode,
            steps_per_protocol_step=int(integrator.get("steps_per_protocol_step", 4000)),
            seed=int(raw.get("seed", 0)),
            rri_fluctuation=float(raw.get("model", {}).get("rri_fluctuation", 0.0)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    return config_from_dict(raw)


def config_summary(cfg: ScenarioConfig) -> dict:
    """Laboratory-unit echo of the runtime values, for logs and CSV rows."""
    v = cfg.model.V
    return {
        "gate": cfg.gate.name,
        "scheme": cfg.scheme,
        "omega_max_MHz_over_2pi": cfg.omega_max / TWO_PI,
        "V_MHz_over_2pi": (float("nan") if callable(v) else v / TWO_PI),
        "temperature_uK": cfg.doppler.temperature_uK if cfg.doppler else 0.0,
        "spin_echo": bool(cfg.doppler.echo) if cfg.doppler else False,
        "xi": cfg.xi,
        "epsilon": cfg.epsilon,
        "rri_fluctuation": cfg.rri_fluctuation,
        "seed": cfg.seed,
    }
