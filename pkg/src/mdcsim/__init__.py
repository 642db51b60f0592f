"""Slotted simulator for congestion handling in MPTCP mobile device clouds."""

from .config import ConfigError, SimulationConfig, load_config, parse_config
from .engine import Simulation, run, run_pairs, run_sweep
from .metrics import MetricsReport, SweepReport, conservation_check

__all__ = [
    "ConfigError",
    "MetricsReport",
    "Simulation",
    "SimulationConfig",
    "SweepReport",
    "conservation_check",
    "load_config",
    "parse_config",
    "run",
    "run_pairs",
    "run_sweep",
]
