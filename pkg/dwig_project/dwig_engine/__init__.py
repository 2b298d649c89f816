"""
Double-Wound Induction Generator Engine
Simulation, online identification and adaptive voltage control

Package Structure:
- engine_models.py: Data models, enums and constants
- errors.py: Exception hierarchy
- machine.py: Nonlinear dq0 plant, RK4 integration, steady-state oracle
- sysid.py: ARX model and recursive least squares
- control.py: Penalized minimum-variance law and dither source
- loop.py: Open/closed-loop experiment engine and tuning sweeps
- metrics.py: Step-response metrics
- config.py: YAML scenario and machine configuration
- log_utils.py: Throttled logging for per-step events
"""

__version__ = "1.0.0"

# Import all models and constants
from .engine_models import (
    Coupling, LoopMode, EventTarget, EventKind, UStarMode,
    MachineParams, MachineState, MachineInputs, Currents6,
    ArxModel, RegressorWindow, RlsState, MvConfig, ControlHistory, ControlOutput,
    PerturbationEvent, PerfMetrics, TimeSeriesLog,
)

# Import errors
from .errors import (
    DwigError, ConfigError, SingularInductanceMatrix, SingularSystem, DivergedState,
    DimensionMismatch, NonFiniteUpdate, UnrealizableLaw,
)

# Import plant
from .machine import (
    GeneratorModel, build_inductance_matrix, currents_from_fluxes, electromagnetic_torque,
    state_derivative, step_rk4, steady_state, terminal_voltage, trim_operating_point,
)

# Import identification and control
from .sysid import (
    RlsEstimator, arx_predict, arx_simulate, new_rls_state, rls_update, stability_check,
)
from .control import DitherSource, MvController, dither, mv_control

# Import experiments
from .config import ScenarioSpec, load_machine_params, load_scenario
from .loop import run_closed_loop, run_open_loop, run_scenario, sweep
from .metrics import compute_metrics

__all__ = [
    '__version__',

    # Models and enums
    'Coupling',
    'LoopMode',
    'EventTarget',
    'EventKind',
    'UStarMode',
    'MachineParams',
    'MachineState',
    'MachineInputs',
    'Currents6',
    'ArxModel',
    'RegressorWindow',
    'RlsState',
    'MvConfig',
    'ControlHistory',
    'ControlOutput',
    'PerturbationEvent',
    'PerfMetrics',
    'TimeSeriesLog',

    # Errors
    'DwigError',
    'ConfigError',
    'SingularInductanceMatrix',
    'SingularSystem',
    'DivergedState',
    'DimensionMismatch',
    'NonFiniteUpdate',
    'UnrealizableLaw',

    # Plant
    'GeneratorModel',
    'build_inductance_matrix',
    'currents_from_fluxes',
    'electromagnetic_torque',
    'state_derivative',
    'step_rk4',
    'steady_state',
    'terminal_voltage',
    'trim_operating_point',

    # Identification and control
    'RlsEstimator',
    'arx_predict',
    'arx_simulate',
    'new_rls_state',
    'rls_update',
    'stability_check',
    'DitherSource',
    'MvController',
    'dither',
    'mv_control',

    # Experiments
    'ScenarioSpec',
    'load_machine_params',
    'load_scenario',
    'run_open_loop',
    'run_closed_loop',
    'run_scenario',
    'sweep',
    'compute_metrics',
]
