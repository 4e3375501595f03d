"""Closed-form solutions and their verification."""

from .thresholds import (
    LambdaPair,
    LogisticThreshold,
    ThresholdSolution,
    bm_pasting_constants,
    lambda_roots,
    logistic_threshold_fn,
    logistic_value_at_threshold,
    solve_threshold_bm,
    solve_threshold_logistic,
)
from .values import (
    AnalyticSolution,
    BMThresholdValue,
    ChatterValue,
    LogisticThresholdValue,
    ValueFunction,
    component_value,
    solve,
    value_bm,
    value_logistic,
)
from .verify import Grid, PastingCheck, VerificationReport, fd_derivatives, smooth_pasting, verify_conditions

__all__ = [
    "AnalyticSolution",
    "BMThresholdValue",
    "ChatterValue",
    "Grid",
    "LambdaPair",
    "LogisticThreshold",
    "LogisticThresholdValue",
    "PastingCheck",
    "ThresholdSolution",
    "ValueFunction",
    "VerificationReport",
    "bm_pasting_constants",
    "component_value",
    "fd_derivatives",
    "lambda_roots",
    "logistic_threshold_fn",
    "logistic_value_at_threshold",
    "smooth_pasting",
    "solve",
    "solve_threshold_bm",
    "solve_threshold_logistic",
    "value_bm",
    "value_logistic",
    "verify_conditions",
]
