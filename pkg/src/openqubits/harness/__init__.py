"""Configuration, experiment runner, sweeps, presets and CSV output."""
from .config import ConfigError, ExperimentConfig, SweepSpec, load_config, parse_config
from .output import point_filename, read_csv, write_csv, write_sweep
from .presets import PRESET_NAMES, UnknownPresetError, figure_preset
from .runner import (
    SolverError,
    SweepPoint,
    TimeSeries,
    run_experiment,
    run_sweep,
    violation_intervals,
)

__all__ = [
    "ConfigError", "ExperimentConfig", "SweepSpec", "load_config", "parse_config",
    "point_filename", "read_csv", "write_csv", "write_sweep",
    "PRESET_NAMES", "UnknownPresetError", "figure_preset",
    "SolverError", "SweepPoint", "TimeSeries", "run_experiment", "run_sweep", "violation_intervals",
]
