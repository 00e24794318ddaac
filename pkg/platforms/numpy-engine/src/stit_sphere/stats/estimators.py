"""
Monte Carlo estimators over replicated realization summaries.

Means use the sample standard error. Typical-object means and adjacencies
are ratios of means ``R = mean(y) / mean(x)`` with the delta-method variance

    Var(R) ~ (s_y^2 + R^2 s_x^2 - 2 R s_xy) / (n * mean(x)^2)
"""

from __future__ import annotations

import logging
import math
from typing import Iterable, Mapping, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from ..errors import EstimationError
from ..great_circles import gc_closed_form
from ..tessellation import RealizationSummary
from .oracle import ADJACENCY_FORMULAS, OPEN_ADJACENCIES, closed_form

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * math.pi

Summaries = Union[pd.DataFrame, Iterable[RealizationSummary]]

# report name -> summary column
MEAN_COLUMNS: dict[str, str] = {
    "L_E": "edge_length",
    "L_M": "segment_length",
    "L_S": "side_length",
    "lambda_Z": "cells",
    "lambda_E": "edges",
    "lambda_V": "vertices",
    "lambda_S": "sides",
    "lambda_M": "segments",
    "equator_vertices": "equator_vertices",
    "equator_sides": "equator_sides",
}

# report name -> (numerator column or None for the constant 4*pi, denominator column)
TYPICAL_COLUMNS: dict[str, tuple[Optional[str], str]] = {
    "a_Z": (None, "cells"),
    "ell_boundary_Z": ("side_length", "cells"),
    "ell_E": ("edge_length", "edges"),
    "ell_S": ("side_length", "sides"),
    "ell_M": ("segment_length", "segments"),
}

# adjacency pair -> (incidence total, object count)
ADJACENCY_COLUMNS: dict[str, tuple[str, str]] = {
    "ZE": ("cell_edge", "cells"),
    "ZV": ("cell_vertex", "cells"),
    "EZ": ("edge_cell", "edges"),
    "EV": ("vertex_edge", "edges"),
    "ES": ("side_edge", "edges"),
    "EM": ("edge_segment", "edges"),
    "VZ": ("cell_vertex", "vertices"),
    "VE": ("vertex_edge", "vertices"),
    "VS": ("side_vertex", "vertices"),
    "VM": ("vertex_segment", "vertices"),
    "SE": ("side_edge", "sides"),
    "SV": ("side_vertex", "sides"),
    "SM": ("side_segment", "sides"),
    "ME": ("edge_segment", "segments"),
    "MV": ("vertex_segment", "segments"),
    "MS": ("side_segment", "segments"),
    "ZM": ("cell_segment", "cells"),
    "MZ": ("cell_segment", "segments"),
    "ZS": ("cell_side", "cells"),
    "SZ": ("cell_side", "sides"),
    "SS": ("side_side", "sides"),
}


class QuantityEstimate(BaseModel):
    """One estimated quantity, compared with its closed form when one exists."""

    name: str
    estimate: float
    standard_error: float = Field(..., ge=0.0)
    oracle: Optional[float] = Field(None, description="Closed-form value; null when unknown")
    z_score: Optional[float] = None
    verified: bool = Field(False, description="True when an oracle value was available")

    @classmethod
    def build(cls, name: str, estimate: float, standard_error: float, oracle: Optional[float] = None) -> "QuantityEstimate":
        z = None
        if oracle is not None:
            diff = estimate - oracle
            if abs(diff) <= 1e-9 * max(1.0, abs(oracle)):
                z = 0.0
            elif standard_error > 0.0:
                z = diff / standard_error
            else:
                z = math.copysign(math.inf, diff)
        return cls(
            name=name,
            estimate=float(estimate),
            standard_error=float(standard_error),
            oracle=None if oracle is None else float(oracle),
            z_score=z,
            verified=oracle is not None,
        )

    def within(self, k: float) -> bool:
        return self.z_score is None or abs(self.z_score) <= k


class EstimateReport(BaseModel):
    """Estimates of one batch of replications."""

    model: str = "splitting"
    t: float
    replications: int = Field(..., ge=1)
    seed: Optional[int] = None
    quantities: dict[str, QuantityEstimate] = Field(default_factory=dict)

    def merge(self, other: "EstimateReport") -> "EstimateReport":
        return self.model_copy(update={"quantities": {**self.quantities, **other.quantities}})

    def max_abs_z(self) -> float:
        zs = [abs(q.z_score) for q in self.quantities.values() if q.z_score is not None]
        return max(zs) if zs else 0.0

    def failures(self, k: float) -> list[str]:
        return [name for name, q in self.quantities.items() if not q.within(k)]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "quantity": name,
                "estimate": q.estimate,
                "standard_error": q.standard_error,
                "oracle": q.oracle,
                "z_score": q.z_score,
                "verified": q.verified,
            }
            for name, q in self.quantities.items()
        ]
        return pd.DataFrame(rows, columns=["quantity", "estimate", "standard_error", "oracle", "z_score", "verified"])


def summaries_frame(summaries: Summaries) -> pd.DataFrame:
    """Collect summaries (or pass a frame through) and check it is usable."""
    if isinstance(summaries, pd.DataFrame):
        frame = summaries
    else:
        frame = pd.DataFrame([s.as_dict() for s in summaries])
    if frame.empty:
        raise EstimationError("No realizations to estimate from")
    if frame["t"].nunique() != 1:
        raise EstimationError("Summaries mix different values of t")
    return frame


def mean_estimate(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise EstimationError("At least two replications are needed for a standard error")
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def ratio_estimate(numerator: np.ndarray, denominator: np.ndarray) -> tuple[float, float]:
    """Ratio of sample means with its delta-method standard error."""
    y = np.asarray(numerator, dtype=float)
    x = np.asarray(denominator, dtype=float)
    n = x.size
    if n < 2:
        raise EstimationError("At least two replications are needed for a standard error")
    x_bar = float(x.mean())
    if x_bar == 0.0:
        raise EstimationError("Ratio estimator has a zero denominator in every replication")
    ratio = float(y.mean()) / x_bar
    cov = np.cov(y, x, ddof=1)
    variance = (cov[0, 0] + ratio * ratio * cov[1, 1] - 2.0 * ratio * cov[0, 1]) / (n * x_bar * x_bar)
    return ratio, math.sqrt(max(float(variance), 0.0))


def correlation_estimate(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Sample correlation and its large-sample standard error ``1/sqrt(n)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 3:
        raise EstimationError("Correlation needs at least three paired observations")
    if x.std() == 0.0 or y.std() == 0.0:
        raise EstimationError("Correlation is undefined for a constant sample")
    return float(np.corrcoef(x, y)[0, 1]), 1.0 / math.sqrt(x.size)


def _report(frame: pd.DataFrame, quantities: dict[str, QuantityEstimate], seed: Optional[int], model: str) -> EstimateReport:
    return EstimateReport(
        model=model,
        t=float(frame["t"].iloc[0]),
        replications=len(frame),
        seed=seed,
        quantities=quantities,
    )


def estimate_means(
    summaries: Summaries,
    seed: Optional[int] = None,
    oracle: Optional[Mapping[str, float]] = None,
    model: str = "splitting",
    columns: Mapping[str, str] = MEAN_COLUMNS,
) -> EstimateReport:
    """Sample means of totals, intensities and equator counts."""
    frame = summaries_frame(summaries)
    t = float(frame["t"].iloc[0])
    oracle = closed_form(t).as_dict() if oracle is None else oracle
    quantities = {
        name: QuantityEstimate.build(name, *mean_estimate(frame[column].to_numpy()), oracle.get(name))
        for name, column in columns.items()
    }
    return _report(frame, quantities, seed, model)


def typical_estimates(
    summaries: Summaries,
    seed: Optional[int] = None,
    oracle: Optional[Mapping[str, float]] = None,
    model: str = "splitting",
    columns: Mapping[str, tuple[Optional[str], str]] = TYPICAL_COLUMNS,
) -> EstimateReport:
    """Typical cell area and typical lengths as ratios of means."""
    frame = summaries_frame(summaries)
    t = float(frame["t"].iloc[0])
    if t <= 0:
        raise EstimationError("typical-object means are undefined at t = 0")
    oracle = closed_form(t).as_dict() if oracle is None else oracle
    quantities = {}
    for name, (numerator, denominator) in columns.items():
        num = np.full(len(frame), FOUR_PI) if numerator is None else frame[numerator].to_numpy()
        quantities[name] = QuantityEstimate.build(
            name, *ratio_estimate(num, frame[denominator].to_numpy()), oracle.get(name)
        )
    return _report(frame, quantities, seed, model)


def adjacency_estimates(summaries: Summaries, seed: Optional[int] = None) -> EstimateReport:
    """Mean adjacency numbers; the open pairs are reported without an oracle."""
    frame = summaries_frame(summaries)
    t = float(frame["t"].iloc[0])
    if t <= 0:
        raise EstimationError("adjacencies are undefined at t = 0")
    quantities = {}
    for pair, (incidences, objects) in ADJACENCY_COLUMNS.items():
        oracle = None if pair in OPEN_ADJACENCIES else ADJACENCY_FORMULAS[pair](t)
        name = f"mu_{pair}"
        quantities[name] = QuantityEstimate.build(
            name, *ratio_estimate(frame[incidences].to_numpy(), frame[objects].to_numpy()), oracle
        )
    return _report(frame, quantities, seed, "splitting")


def full_report(summaries: Summaries, seed: Optional[int] = None) -> EstimateReport:
    """Means, typical objects and adjacencies of one batch (the latter two only for ``t > 0``)."""
    frame = summaries_frame(summaries)
    report = estimate_means(frame, seed)
    if report.t > 0:
        report = report.merge(typical_estimates(frame, seed)).merge(adjacency_estimates(frame, seed))
    logger.info("Estimated %d quantities from %d replications", len(report.quantities), report.replications)
    return report


GC_MEAN_COLUMNS: dict[str, str] = {
    "L_E": "edge_length",
    "L_S": "side_length",
    "lambda_V": "vertices",
    "lambda_E": "edges",
    "lambda_Z": "cells",
}

GC_TYPICAL_COLUMNS: dict[str, tuple[Optional[str], str]] = {
    "a_Z": (None, "cells"),
    "ell_boundary_Z": ("side_length", "cells"),
    "ell_E": ("edge_length", "edges"),
}


def gc_report(summaries: Summaries, seed: Optional[int] = None) -> EstimateReport:
    """Estimates for the great-circle model against its own closed forms."""
    frame = summaries_frame(summaries)
    t = float(frame["t"].iloc[0])
    oracle = gc_closed_form(t).as_dict()
    report = estimate_means(frame, seed, oracle=oracle, model="great_circle", columns=GC_MEAN_COLUMNS)
    if t > 0:
        report = report.merge(
            typical_estimates(frame, seed, oracle=oracle, model="great_circle", columns=GC_TYPICAL_COLUMNS)
        )
    return report
