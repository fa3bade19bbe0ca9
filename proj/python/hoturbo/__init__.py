"""Handover parameter optimization with trust-region Bayesian optimization."""

from ._hoturbo import (
    BudgetError,
    Error,
    GpHyper,
    GpModel,
    HoConfig,
    MobilityEvaluator,
    NumericalError,
    ParseError,
    Scenario,
    ValidationError,
    benchmark_set,
    kernel,
    load_ho_config,
    load_scenario,
    minimize,
    normalize_kpi,
    objective,
    optimize_ho,
    parse_scenario,
    save_ho_config,
    target_row_count,
    tr_side_lengths,
)

__all__ = [name for name in dir() if not name.startswith("_")]
