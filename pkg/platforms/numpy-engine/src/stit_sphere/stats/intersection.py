"""
Points where a fixed great circle crosses the tessellation.

Away from the equator the crossings on each open half of the circle form a
Poisson process; on an open half circle the count is Poisson with mean ``t``.
The two points where the circle meets the equator are always present and are
reported apart from the random ones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import NamedTuple

import numpy as np
from scipy import stats

from ..errors import EstimationError, ParameterError
from ..geometry import NORTH_POLE, SIGN_TOLERANCE, TWO_PI, GreatCircle
from ..process import ProcessConfig, map_replications
from ..tessellation import EQUATOR_ID, Tessellation

logger = logging.getLogger(__name__)

MIN_GOF_SAMPLE = 100
MIN_EXPECTED_PER_BIN = 5.0


@dataclass(frozen=True)
class HemisphereCrossings:
    """Crossings of one circle with the edges of a tessellation, by hemisphere."""

    upper: np.ndarray
    lower: np.ndarray
    equator: np.ndarray

    @property
    def counts(self) -> tuple[int, int]:
        return len(self.upper), len(self.lower)


class GofResult(NamedTuple):
    statistic: float
    p_value: float
    bins: int


def _angle_on(normals: np.ndarray, starts: np.ndarray, points: np.ndarray) -> np.ndarray:
    cross = np.einsum("ij,ij->i", normals, np.cross(starts, points))
    return np.mod(np.arctan2(cross, np.einsum("ij,ij->i", starts, points)), TWO_PI)


def intersect_with_circle(tess: Tessellation, g: GreatCircle) -> HemisphereCrossings:
    """Classify every point of ``g`` lying on an edge of ``tess``.

    Raises:
        ParameterError: If ``g`` is the equator; that case is not supported.
    """
    if g.is_equator():
        raise ParameterError(
            "Crossings with the equator itself are not a Poisson process; intersect with another circle"
        )
    u = g.array
    w = np.cross(u, np.asarray(NORTH_POLE))
    w /= np.linalg.norm(w)
    equator = np.array([w, -w])

    edges = [e for e in tess.edges.values() if e.carrier != EQUATOR_ID]
    if not edges:
        empty = np.empty((0, 3))
        return HemisphereCrossings(upper=empty, lower=empty.copy(), equator=equator)

    normals = np.array([tess.carriers[e.carrier].normal for e in edges])
    starts = np.array([tess.point(e.start) for e in edges])
    ends = np.array([tess.point(e.end) for e in edges])
    x = np.cross(normals, u)
    norms = np.linalg.norm(x, axis=1)
    # Edges on g itself have no isolated crossing.
    usable = norms > SIGN_TOLERANCE
    x = x[usable] / norms[usable, None]
    normals, starts, ends = normals[usable], starts[usable], ends[usable]
    span = _angle_on(normals, starts, ends)

    points = []
    for candidate in (x, -x):
        along = _angle_on(normals, starts, candidate)
        inside = (along > 0.0) & (along < span)
        points.append(candidate[inside])
    found = np.concatenate(points)
    upper = found[found[:, 2] > SIGN_TOLERANCE]
    lower = found[found[:, 2] < -SIGN_TOLERANCE]
    return HemisphereCrossings(upper=upper, lower=lower, equator=equator)


def intersection_counts(tess: Tessellation, g: GreatCircle) -> tuple[int, int]:
    return intersect_with_circle(tess, g).counts


def _counts_task(tess: Tessellation, circle: GreatCircle) -> tuple[int, int, int]:
    crossings = intersect_with_circle(tess, circle)
    return (*crossings.counts, len(crossings.equator))


def crossing_counts(
    t: float, g: GreatCircle, reps: int, seed: int, jobs: int = 1
) -> np.ndarray:
    """Upper, lower and equator crossing counts of ``reps`` realizations, shape ``(reps, 3)``."""
    if g.is_equator():
        raise ParameterError("Crossings with the equator itself are not supported")
    config = ProcessConfig(t_max=t, seed=seed)
    rows = list(map_replications(partial(_counts_task, circle=g), config, reps, jobs))
    return np.array(rows, dtype=int).reshape(reps, 3)


def _pool(observed: np.ndarray, expected: np.ndarray) -> tuple[list[float], list[float]]:
    """Merge neighbouring bins left to right until each expects at least five."""
    obs_bins: list[float] = []
    exp_bins: list[float] = []
    obs_acc = exp_acc = 0.0
    for o, e in zip(observed, expected):
        obs_acc += o
        exp_acc += e
        if exp_acc >= MIN_EXPECTED_PER_BIN:
            obs_bins.append(obs_acc)
            exp_bins.append(exp_acc)
            obs_acc = exp_acc = 0.0
    if exp_acc > 0.0 or obs_acc > 0.0:
        if obs_bins:
            obs_bins[-1] += obs_acc
            exp_bins[-1] += exp_acc
        else:
            obs_bins.append(obs_acc)
            exp_bins.append(exp_acc)
    return obs_bins, exp_bins


def poisson_gof(counts, mean: float) -> GofResult:
    """Chi-square test of integer ``counts`` against Poisson(``mean``).

    The mean is given, not fitted, so the test has ``bins - 1`` degrees of
    freedom. The last bin collects the whole upper tail.
    """
    counts = np.asarray(counts)
    if counts.size < MIN_GOF_SAMPLE:
        raise EstimationError(f"Goodness of fit needs at least {MIN_GOF_SAMPLE} counts, got {counts.size}")
    if not math.isfinite(mean) or mean <= 0:
        raise ParameterError("Poisson mean must be positive")
    if np.any(counts < 0) or np.any(counts != np.round(counts)):
        raise EstimationError("Counts must be non-negative integers")
    counts = counts.astype(int)
    n = counts.size
    top = max(int(counts.max()), int(stats.poisson.ppf(1.0 - 1e-9, mean))) + 1
    observed = np.bincount(counts, minlength=top + 1)[: top + 1].astype(float)
    observed[top] = float(np.count_nonzero(counts >= top))
    expected = n * stats.poisson.pmf(np.arange(top + 1), mean)
    expected[top] = n * stats.poisson.sf(top - 1, mean)

    obs_bins, exp_bins = _pool(observed, expected)
    if len(obs_bins) < 2:
        raise EstimationError("Too few bins after pooling for a chi-square test")
    exp_arr = np.asarray(exp_bins)
    exp_arr *= n / exp_arr.sum()
    result = stats.chisquare(np.asarray(obs_bins), exp_arr)
    logger.debug("Poisson(%s) fit over %d bins: chi2=%.4f p=%.4g", mean, len(obs_bins), result.statistic, result.pvalue)
    return GofResult(statistic=float(result.statistic), p_value=float(result.pvalue), bins=len(obs_bins))


__all__ = [
    "HemisphereCrossings",
    "GofResult",
    "intersect_with_circle",
    "intersection_counts",
    "crossing_counts",
    "poisson_gof",
]
