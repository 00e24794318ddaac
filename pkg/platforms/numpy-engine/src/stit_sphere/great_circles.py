"""Poisson great-circle tessellation: the equator plus Poisson(t) uniform circles."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyBudgetExceeded, DegenerateEventError, EstimationError, InvariantViolationError, ParameterError
from .geometry import GreatCircle, UnitVec, uniform_points
from .observability import get_metrics
from .process import DEFAULT_DEGENERACY_RETRIES, ProcessConfig, make_rng
from .tessellation import Tessellation, initial, insert_circle, validate

logger = logging.getLogger(__name__)


@dataclass
class GreatCircleTessellation:
    t: float
    circles: list[GreatCircle]
    tessellation: Tessellation

    @property
    def n_circles(self) -> int:
        return len(self.circles)


def run_gc(
    t: float,
    rng: np.random.Generator,
    degeneracy_retries: int = DEFAULT_DEGENERACY_RETRIES,
    check_invariants: bool = True,
) -> GreatCircleTessellation:
    """Build one realization by inserting the circles one at a time."""
    if t < 0:
        raise ParameterError("t must be >= 0")
    n = int(rng.poisson(t))
    tess = initial(side_to_side=True)
    circles: list[GreatCircle] = []
    resampled = 0
    for _ in range(n):
        for _attempt in range(degeneracy_retries):
            circle = GreatCircle(UnitVec.of(uniform_points(rng, 1)[0]))
            try:
                insert_circle(tess, circle)
            except DegenerateEventError as exc:
                resampled += 1
                logger.debug("Degenerate circle resampled: %s", exc)
                continue
            circles.append(circle)
            break
        else:
            raise DegeneracyBudgetExceeded(f"{degeneracy_retries} consecutive degenerate circles")
    tess.time = t
    if check_invariants:
        problems = validate(tess)
        if problems:
            raise InvariantViolationError(problems)
    get_metrics().record_realization(n, n, resampled, model="great_circle")
    return GreatCircleTessellation(t=t, circles=circles, tessellation=tess)


def simulate_gc(config: ProcessConfig) -> Tessellation:
    """Adapter with the ``simulate`` signature used by ``process.map_replications``."""
    return run_gc(config.t_max, make_rng(config.seed), config.degeneracy_retries).tessellation


@dataclass(frozen=True)
class GreatCircleOracle:
    """Closed-form means of the great-circle tessellation at time ``t``."""

    t: float

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ParameterError("t must be >= 0")

    @property
    def total_edge_length(self) -> float:
        return 2.0 * math.pi * (1.0 + self.t - math.exp(-self.t))

    @property
    def total_side_length(self) -> float:
        return 4.0 * math.pi * (self.t + 1.0)

    @property
    def vertex_intensity(self) -> float:
        return self.t**2 + 2.0 * self.t

    @property
    def edge_intensity(self) -> float:
        return 2.0 * (self.t**2 + 2.0 * self.t)

    @property
    def cell_intensity(self) -> float:
        return self.t**2 + 2.0 * self.t + 2.0

    def _require_positive(self) -> None:
        if self.t <= 0:
            raise EstimationError("typical-object means are undefined at t = 0")

    @property
    def mean_edge_length(self) -> float:
        self._require_positive()
        return math.pi * (1.0 + self.t - math.exp(-self.t)) / (self.t**2 + 2.0 * self.t)

    @property
    def mean_cell_perimeter(self) -> float:
        self._require_positive()
        return self.total_side_length / self.cell_intensity

    @property
    def mean_cell_area(self) -> float:
        self._require_positive()
        return 4.0 * math.pi / self.cell_intensity

    def as_dict(self) -> dict[str, float]:
        values = {
            "L_E": self.total_edge_length,
            "L_S": self.total_side_length,
            "lambda_V": self.vertex_intensity,
            "lambda_E": self.edge_intensity,
            "lambda_Z": self.cell_intensity,
        }
        if self.t > 0:
            values.update(
                ell_E=self.mean_edge_length,
                ell_boundary_Z=self.mean_cell_perimeter,
                a_Z=self.mean_cell_area,
            )
        return values


def gc_closed_form(t: float) -> GreatCircleOracle:
    return GreatCircleOracle(t)
