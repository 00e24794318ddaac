"""
Capacity functional: the probability that the tessellation misses a set of caps.

For a set ``C`` inside one open hemisphere the miss probability is
``exp(-t * tau([C]))`` for a single cap. For two disjoint caps a circle may
first separate them, after which the two cells evolve independently:

    P(miss) = exp(-t a) + s * integral_0^t exp(-u a) exp(-(t - u) b) du

with ``a = tau([conv(C1 u C2)])``, ``b = tau([C1]) + tau([C2])`` and
``s = tau([C1|C2])``. The integral is evaluated in closed form.
"""

from __future__ import annotations

import logging
import math
from functools import partial
from typing import Literal, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, InstanceOf, model_validator

from ..errors import ParameterError
from ..geometry import (
    SphericalCap,
    angular_distance,
    arcs_meet_cap,
    check_cap_pair,
    tau_hull_mc,
    tau_hull_quadrature,
    tau_separating_mc,
    tau_separating_quadrature,
)
from ..process import ProcessConfig, make_rng, map_replications
from ..tessellation import Tessellation

logger = logging.getLogger(__name__)

# Below this gap between hull and single-cap rates the integral uses its limit.
RATE_GAP_TOLERANCE = 1e-12


class CapacitySpec(BaseModel):
    """Caps whose joint avoidance probability is wanted.

    All caps must be pairwise disjoint and lie in the same open hemisphere
    (upper or lower), away from the equator.
    """

    model_config = ConfigDict(frozen=True)

    caps: list[InstanceOf[SphericalCap]] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_caps(self) -> "CapacitySpec":
        sides = set()
        for cap in self.caps:
            z = cap.center.z
            if abs(z) <= math.sin(cap.theta):
                raise ValueError(
                    f"Cap at {tuple(round(c, 6) for c in cap.center)} meets the equator; "
                    "caps must lie in an open hemisphere"
                )
            sides.add(1 if z > 0 else -1)
        if len(sides) > 1:
            raise ValueError("All caps must lie in the same open hemisphere")
        for i, first in enumerate(self.caps):
            for second in self.caps[i + 1 :]:
                if angular_distance(first.center, second.center) <= first.theta + second.theta:
                    raise ValueError("Caps must be pairwise disjoint")
        return self

    @classmethod
    def single(cls, colatitude: float, longitude: float, theta: float) -> "CapacitySpec":
        return cls(caps=[SphericalCap.at(colatitude, longitude, theta)])

    @property
    def hemisphere(self) -> int:
        return 1 if self.caps[0].center.z > 0 else -1

    @property
    def size(self) -> int:
        return len(self.caps)


class TwoCapTerms(NamedTuple):
    hull: float
    separating: float
    single_sum: float


def tessellation_misses(tess: Tessellation, caps: tuple[SphericalCap, ...]) -> bool:
    """True when no edge of ``tess`` meets any of the caps.

    Caps avoid the equator, so a tessellation without edges misses them.
    """
    if not tess.edges:
        return True
    edges = list(tess.edges.values())
    normals = np.array([tess.carriers[e.carrier].normal for e in edges])
    starts = np.array([tess.point(e.start) for e in edges])
    ends = np.array([tess.point(e.end) for e in edges])
    return not any(bool(arcs_meet_cap(normals, starts, ends, cap).any()) for cap in caps)


def _misses_task(tess: Tessellation, caps: tuple[SphericalCap, ...]) -> bool:
    return tessellation_misses(tess, caps)


def capacity_mc(
    spec: CapacitySpec,
    t: float,
    reps: int,
    seed: int,
    jobs: int = 1,
    max_rejection_iters: Optional[int] = None,
) -> tuple[float, float]:
    """Fraction of simulated realizations missing every cap, with its binomial SE."""
    extra = {} if max_rejection_iters is None else {"max_rejection_iters": max_rejection_iters}
    config = ProcessConfig(t_max=t, seed=seed, **extra)
    task = partial(_misses_task, caps=tuple(spec.caps))
    misses = np.fromiter(map_replications(task, config, reps, jobs), dtype=bool, count=reps)
    p = float(misses.mean())
    se = math.sqrt(p * (1.0 - p) / reps)
    logger.info("Capacity of %d cap(s) at t=%s: miss fraction %.5f +- %.5f", spec.size, t, p, se)
    return p, se


def capacity_exact(spec: CapacitySpec, t: float) -> float:
    """``exp(-t * tau([C]))`` for a single cap."""
    if t < 0:
        raise ParameterError("t must be >= 0")
    if spec.size != 1:
        raise ParameterError("capacity_exact takes a single cap; use capacity_recursion_two_caps for two")
    return math.exp(-t * spec.caps[0].tau)


def two_cap_closed_form(t: float, hull: float, single_sum: float, separating: float) -> float:
    """Miss probability of two caps from their ``tau`` terms."""
    if t < 0:
        raise ParameterError("t must be >= 0")
    gap = hull - single_sum
    if abs(gap) < RATE_GAP_TOLERANCE:
        integral = t
    else:
        integral = -math.expm1(-t * gap) / gap
    return math.exp(-t * hull) + separating * math.exp(-t * single_sum) * integral


def two_cap_terms(
    spec: CapacitySpec,
    method: Literal["quadrature", "mc"] = "quadrature",
    n: int = 1_000_000,
    seed: int = 0,
    grid: tuple[int, int] = (1024, 2048),
) -> TwoCapTerms:
    """``tau`` of the hull, of the separating circles, and of each cap summed."""
    if spec.size != 2:
        raise ParameterError(f"Two-cap recursion needs exactly 2 caps, got {spec.size}")
    c1, c2 = spec.caps
    check_cap_pair(c1, c2)
    if method == "quadrature":
        hull = tau_hull_quadrature(c1, c2, *grid)
        separating = tau_separating_quadrature(c1, c2, *grid)
    elif method == "mc":
        rng = make_rng(seed)
        hull, _ = tau_hull_mc(c1, c2, n, rng)
        separating, _ = tau_separating_mc(c1, c2, n, rng)
    else:
        raise ParameterError(f"Unknown method {method!r}; expected 'quadrature' or 'mc'")
    return TwoCapTerms(hull=hull, separating=separating, single_sum=c1.tau + c2.tau)


def capacity_recursion_two_caps(
    spec: CapacitySpec,
    t: float,
    method: Literal["quadrature", "mc"] = "quadrature",
    n: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Miss probability of two disjoint caps from the separation recursion."""
    if spec.size != 2:
        raise ParameterError(f"Two-cap recursion needs exactly 2 caps, got {spec.size}")
    if t < 0:
        raise ParameterError("t must be >= 0")
    if t == 0:
        return 1.0
    terms = two_cap_terms(spec, method, n, seed)
    logger.debug("Two-cap terms: %s", terms)
    return two_cap_closed_form(t, terms.hull, terms.single_sum, terms.separating)


__all__ = [
    "CapacitySpec",
    "TwoCapTerms",
    "tessellation_misses",
    "capacity_mc",
    "capacity_exact",
    "two_cap_closed_form",
    "two_cap_terms",
    "capacity_recursion_two_caps",
]
