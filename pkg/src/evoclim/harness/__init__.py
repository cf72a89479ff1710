"""Scenario configuration, figure presets, cross-engine comparison and CLI."""
from .config import ConfigError, Scenario, parse_config, validate_scenario
from .presets import preset
from .runner import ComparisonReport, run_scenario
from .sweep import sweep

__all__ = [
    "ComparisonReport",
    "ConfigError",
    "Scenario",
    "parse_config",
    "preset",
    "run_scenario",
    "sweep",
    "validate_scenario",
]
