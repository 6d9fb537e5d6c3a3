"""Experiment harness: configs, multi-replica runs, CSV/SVG output and checks."""

from .analysis import GridSearchResult, grid_search_primal_dual, grid_search_svm, verify_schedules
from .config import ExperimentConfig, config_from_dict, load_config, resolve_output_dir
from .io import read_trace_csv, write_replica_csv, write_trace_csv
from .plot import emit_plot_svg
from .reference import instance_fingerprint, load_reference, solve_reference, write_reference
from .runner import AggregateTrace, aggregate, build_problem, run_experiment, run_replica

__all__ = [
    "AggregateTrace",
    "ExperimentConfig",
    "GridSearchResult",
    "aggregate",
    "build_problem",
    "config_from_dict",
    "emit_plot_svg",
    "grid_search_primal_dual",
    "grid_search_svm",
    "instance_fingerprint",
    "load_config",
    "load_reference",
    "read_trace_csv",
    "resolve_output_dir",
    "run_experiment",
    "run_replica",
    "solve_reference",
    "verify_schedules",
    "write_reference",
    "write_replica_csv",
    "write_trace_csv",
]
