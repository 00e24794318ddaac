"""Closed forms, estimators, capacity functional and intersection tests."""

from .capacity import CapacitySpec, capacity_exact, capacity_mc, capacity_recursion_two_caps, two_cap_closed_form
from .estimators import (
    EstimateReport,
    QuantityEstimate,
    adjacency_estimates,
    correlation_estimate,
    estimate_means,
    full_report,
    gc_report,
    typical_estimates,
)
from .intersection import HemisphereCrossings, intersect_with_circle, intersection_counts, poisson_gof
from .oracle import OracleValues, closed_form, planar_limits

__all__ = [
    "OracleValues",
    "closed_form",
    "planar_limits",
    "EstimateReport",
    "QuantityEstimate",
    "estimate_means",
    "typical_estimates",
    "adjacency_estimates",
    "correlation_estimate",
    "full_report",
    "gc_report",
    "CapacitySpec",
    "capacity_exact",
    "capacity_mc",
    "two_cap_closed_form",
    "capacity_recursion_two_caps",
    "HemisphereCrossings",
    "intersect_with_circle",
    "intersection_counts",
    "poisson_gof",
]
