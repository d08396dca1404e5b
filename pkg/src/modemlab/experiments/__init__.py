"""Config-driven experiment runner, CSV schemas and SVG plots."""
from __future__ import annotations

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, config_from_mapping, default_config, load_config
from .plotting import emit_plot
from .runner import (
    measure_alpha,
    run_ber_sweep,
    run_capacity_audit,
    run_cond_study,
    run_experiment,
    run_fig1,
    run_fig3,
    run_fig6a,
)
from .tables import SCHEMAS, Schema, SchemaError, read_csv, write_csv

__all__ = [
    "EXPERIMENTS",
    "SCHEMAS",
    "ConfigError",
    "ExperimentConfig",
    "Schema",
    "SchemaError",
    "config_from_mapping",
    "default_config",
    "emit_plot",
    "load_config",
    "measure_alpha",
    "read_csv",
    "run_ber_sweep",
    "run_capacity_audit",
    "run_cond_study",
    "run_experiment",
    "run_fig1",
    "run_fig3",
    "run_fig6a",
    "write_csv",
]
