"""Scenario definitions, config loading, experiment runners and the CLI."""

from .config import ConfigError, ExperimentScenario, load_config, resolve_config
from .scenarios import run_calibration, run_scenario
from .summary import RunSummary, summarize

__all__ = [
    "ConfigError",
    "ExperimentScenario",
    "load_config",
    "resolve_config",
    "run_calibration",
    "run_scenario",
    "RunSummary",
    "summarize",
]
