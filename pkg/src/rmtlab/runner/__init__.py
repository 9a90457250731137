"""Configuration-driven experiment runner."""

from .config import (ConfigError, ConfigParseError, ExperimentConfig, MissingKeyError, RangeError,
                     UnknownKeyError, load_config, parse_config)
from .experiments import EXPERIMENTS, run_experiment
from .report import MetricRow, OutputError, Report, write_outputs

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "ExperimentConfig",
    "MissingKeyError",
    "RangeError",
    "UnknownKeyError",
    "load_config",
    "parse_config",
    "EXPERIMENTS",
    "run_experiment",
    "MetricRow",
    "OutputError",
    "Report",
    "write_outputs",
]
