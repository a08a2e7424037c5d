"""Pulse-level simulator for super-robust geometric two-qubit Rydberg gates.

The package synthesizes piecewise geometric pulse schedules, assembles the
two-atom Hamiltonians and collapse channels, propagates the Lindblad master
equation with fixed-step RK4, and reduces the resulting quantum channels to
average gate fidelities, populations, leakage and dephasing diagnostics.

Angular frequencies are rad/us throughout; time is us.  A laboratory value
quoted as "2pi x 8 MHz" is stored as 2*pi*8 rad/us.
"""

from .config import SCHEMA_VERSION, ConfigError, config_from_dict, load_config, validate_config_dict
from .metrics import (
    ExcitationChannel,
    LeakageReport,
    average_gate_fidelity,
    channel_deficits,
    convergence_report,
    depolarizing_channel,
    dump_population_csv,
    excitation_error,
    leakage_probability,
    population_trace,
)
from .model import (
    AtomPairModel,
    CollapseChannel,
    DissipationRates,
    DopplerModel,
    LeakageChannel,
    TwoPhotonLadder,
    collapse_set,
    dark_bright_states,
    pair_dark_bright,
    two_photon_hamiltonians,
)
from .propagate import (
    PropagationError,
    adiabaticity_margin,
    control_geometric_phase,
    dark_state_phase_integral,
    ground_exchange_phase_integral,
    propagate_density,
    propagate_state,
)
from .protocols import (
    GateSpec,
    QuantumChannel,
    ScenarioConfig,
    blockade_ideal_unitary,
    build_protocol,
    channel_tomography,
    ideal_two_qubit_unitary,
    run_blockade_baseline,
    run_channel,
    run_dark_state_baseline,
    run_super_robust_protocol,
)
from .pulses import (
    GeometricTrajectory,
    PulseSchedule,
    PulseSegment,
    TargetSchedules,
    apply_rabi_error,
    control_schedule,
    control_trajectory,
    laser_from_trajectory,
    parallel_transport_residual,
    super_robust_integral,
    target_schedules,
    target_trajectory,
)
from .qcore import (
    DensityMatrix,
    HilbertSpace,
    OperatorMatrix,
    StateVector,
    expectation_value,
    project_to_computational,
    tensor_product,
)
from .sweep import ResultRow, SweepAxis, emit_csv, read_csv_rows, run_scenario, run_sweep

__version__ = "0.1.0"

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "config_from_dict",
    "load_config",
    "validate_config_dict",
    "ExcitationChannel",
    "LeakageReport",
    "average_gate_fidelity",
    "channel_deficits",
    "convergence_report",
    "depolarizing_channel",
    "dump_population_csv",
    "excitation_error",
    "leakage_probability",
    "population_trace",
    "AtomPairModel",
    "CollapseChannel",
    "DissipationRates",
    "DopplerModel",
    "LeakageChannel",
    "TwoPhotonLadder",
    "collapse_set",
    "dark_bright_states",
    "pair_dark_bright",
    "two_photon_hamiltonians",
    "PropagationError",
    "adiabaticity_margin",
    "control_geometric_phase",
    "dark_state_phase_integral",
    "ground_exchange_phase_integral",
    "propagate_density",
    "propagate_state",
    "GateSpec",
    "QuantumChannel",
    "ScenarioConfig",
    "blockade_ideal_unitary",
    "build_protocol",
    "channel_tomography",
    "ideal_two_qubit_unitary",
    "run_blockade_baseline",
    "run_channel",
    "run_dark_state_baseline",
    "run_super_robust_protocol",
    "GeometricTrajectory",
    "PulseSchedule",
    "PulseSegment",
    "TargetSchedules",
    "apply_rabi_error",
    "control_schedule",
    "control_trajectory",
    "laser_from_trajectory",
    "parallel_transport_residual",
    "super_robust_integral",
    "target_schedules",
    "target_trajectory",
    "DensityMatrix",
    "HilbertSpace",
    "OperatorMatrix",
    "StateVector",
    "expectation_value",
    "project_to_computational",
    "tensor_product",
    "ResultRow",
    "SweepAxis",
    "emit_csv",
    "read_csv_rows",
    "run_scenario",
    "run_sweep",
    "__version__",
]
