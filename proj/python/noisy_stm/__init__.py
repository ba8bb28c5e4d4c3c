"""Noisy similar triangles method: solvers, budgets and the experiment harness."""

from ._core import (
    ConfigError,
    IoError,
    NumericError,
    budget_linear_system,
    budget_regularized,
    budget_strongly_convex,
    csv_header,
    next_alpha,
    normalize_config,
    run_experiment,
    run_table,
    stm2_alpha_threshold,
    sweep,
    threshold_search,
    verify,
)

__all__ = [
    "ConfigError",
    "IoError",
    "NumericError",
    "budget_linear_system",
    "budget_regularized",
    "budget_strongly_convex",
    "csv_header",
    "next_alpha",
    "normalize_config",
    "run_experiment",
    "run_table",
    "stm2_alpha_threshold",
    "sweep",
    "threshold_search",
    "verify",
]
