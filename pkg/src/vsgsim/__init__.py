"""Deterministic simulator of an islanded three-phase microgrid formed by
a boost-type impedance-network inverter under virtual-synchronous-generator
control."""

__version__ = "0.1.0"

from .config import (
    ControlParams,
    Event,
    LoadSpec,
    Scenario,
    SystemParams,
    ValidatedConfig,
    default_config,
    load_config,
    solve_duty,
    validate,
)
from .runner import SimOutput, emit, run_scenario
from .transforms import Dq0, ThreePhase
from .ynetwork import DcState, SwitchState, boost_factor

__all__ = [
    "ControlParams",
    "DcState",
    "Dq0",
    "Event",
    "LoadSpec",
    "Scenario",
    "SimOutput",
    "SwitchState",
    "SystemParams",
    "ThreePhase",
    "ValidatedConfig",
    "boost_factor",
    "default_config",
    "emit",
    "load_config",
    "run_scenario",
    "solve_duty",
    "validate",
    "__version__",
]
