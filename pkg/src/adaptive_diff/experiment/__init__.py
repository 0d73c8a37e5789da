"""Configuration, CSV I/O, synthetic trajectories, benchmark runner and CLI."""

from .bench import make_derivative_source, run_benchmark, simulate_pid
from .config import ExperimentConfig, builtin_config, parse_config, serialize_config
from .io import SignalTable, load_signal_csv, write_csv
from .trajectories import snr_db, synth_trajectory

__all__ = [
    "ExperimentConfig",
    "SignalTable",
    "builtin_config",
    "load_signal_csv",
    "make_derivative_source",
    "parse_config",
    "run_benchmark",
    "serialize_config",
    "simulate_pid",
    "snr_db",
    "synth_trajectory",
    "write_csv",
]
