"""
Experiment harness: configuration, runners, reports and the CLI.
"""

from .config import (
    DOMAIN_KINDS,
    EXPERIMENTS,
    AnalysisSpec,
    ConfigError,
    DomainSpec,
    ExperimentConfig,
    SolverSpec,
    emit_config,
    parse_config,
)
from .report import CSV_HEADER, ReportRow, RowBuilder, aggregate, all_passed, render_csv, save_report

__all__ = [
    "AnalysisSpec",
    "CSV_HEADER",
    "ConfigError",
    "DOMAIN_KINDS",
    "DomainSpec",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ReportRow",
    "RowBuilder",
    "SolverSpec",
    "aggregate",
    "all_passed",
    "emit_config",
    "parse_config",
    "render_csv",
    "save_report",
]
