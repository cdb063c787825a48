"""Experiment harness: configs, pipeline runner, reports and forecast diagrams."""

from .config import ExperimentConfig, bundled_config_path, load_config, resolve_config
from .output import emit_forecast_diagram, emit_report, read_report_csv
from .runner import ExperimentError, ExperimentReport, ReportRow, load_dataset, run_experiment

__all__ = [
    "ExperimentConfig", "ExperimentError", "ExperimentReport", "ReportRow",
    "bundled_config_path", "emit_forecast_diagram", "emit_report", "load_config",
    "load_dataset", "read_report_csv", "resolve_config", "run_experiment",
]
