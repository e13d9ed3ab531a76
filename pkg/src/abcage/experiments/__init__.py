"""Config-driven scenario runs and the command-line interface."""
from .config import ConfigError, Scenario, load_scenario, load_scenario_text
from .presets import GROUPS, PRESETS, preset
from .runner import NumericalError, ResultTable, run_scenario, simulate, sweep

__all__ = [
    "ConfigError",
    "GROUPS",
    "NumericalError",
    "PRESETS",
    "ResultTable",
    "Scenario",
    "load_scenario",
    "load_scenario_text",
    "preset",
    "run_scenario",
    "simulate",
    "sweep",
]
