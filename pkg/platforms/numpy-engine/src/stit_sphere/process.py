"""
The splitting dynamic on the sphere.

Each live cell carries an exponential clock with rate ``tau([cell])`` (its
normalised perimeter). The simulation uses one global clock: with total rate
``Lambda`` the next jump is ``Exponential(Lambda)`` away and hits a cell with
probability proportional to its rate. The splitting circle is drawn from
``tau`` restricted to circles hitting the cell by rejection sampling uniform
normals.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from typing import Callable, Iterator, Optional, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import (
    DegeneracyBudgetExceeded,
    DegenerateEventError,
    InvariantViolationError,
    ParameterError,
    RejectionLimitError,
)
from .geometry import GreatCircle, SphericalPolygon, UnitVec, boundary_measure, meets_vertex_hull, uniform_points
from .observability import get_metrics, get_tracer
from .tessellation import RealizationSummary, Tessellation, initial, split, summarize, validate

logger = logging.getLogger(__name__)

DEFAULT_MAX_REJECTION_ITERS = 1_000_000
DEFAULT_DEGENERACY_RETRIES = 100

_MASK64 = (1 << 64) - 1

R = TypeVar("R")


class ProcessConfig(BaseModel):
    """Parameters of one splitting-process run."""

    model_config = ConfigDict(frozen=True)

    t_max: float = Field(..., ge=0.0, description="Target time; the state is frozen here")
    seed: int = Field(..., ge=0, le=_MASK64, description="64-bit master seed")
    max_rejection_iters: int = Field(DEFAULT_MAX_REJECTION_ITERS, ge=1)
    degeneracy_retries: int = Field(DEFAULT_DEGENERACY_RETRIES, ge=1)
    record_events: bool = False
    check_invariants: bool = Field(False, description="Validate the tessellation after every jump")


@dataclass
class RunStats:
    splits: int = 0
    proposals: int = 0
    accepted: int = 0
    degeneracies: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else math.nan


@dataclass(frozen=True)
class SplitEvent:
    """One jump of the process, as written to the event log."""

    index: int
    time: float
    cell: int
    normal: tuple[float, float, float]
    daughters: tuple[int, int]
    segment: int
    vertices: tuple[int, int]


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of replication ``index``: ``splitmix64(master ^ splitmix64(index))``."""
    return _splitmix64((master_seed & _MASK64) ^ _splitmix64(index))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _propose(
    vertices: np.ndarray,
    rng: np.random.Generator,
    max_iters: int,
    tau: float,
    stats: RunStats | None,
    cell_id: int | None = None,
) -> np.ndarray:
    """Rejection-sample a normal whose circle meets the hull of ``vertices``.

    Proposals are drawn in batches sized to the expected number of trials;
    the first accepted normal of a batch wins.
    """
    if len(vertices) == 0:
        # A vertex-free cell is a hemisphere: every circle meets it.
        if stats is not None:
            stats.proposals += 1
            stats.accepted += 1
        return uniform_points(rng, 1)[0]
    batch = int(min(max_iters, max(8, math.ceil(2.0 / max(tau, 1e-12)))))
    drawn = 0
    while drawn < max_iters:
        size = min(batch, max_iters - drawn)
        normals = uniform_points(rng, size)
        accepted = np.flatnonzero(meets_vertex_hull(normals, vertices))
        if accepted.size:
            first = int(accepted[0])
            if stats is not None:
                stats.proposals += first + 1
                stats.accepted += 1
            return normals[first]
        drawn += size
        if stats is not None:
            stats.proposals += size
    raise RejectionLimitError(cell_id, tau, max_iters)


def sample_split_circle(
    p: SphericalPolygon,
    rng: np.random.Generator,
    max_iters: int = DEFAULT_MAX_REJECTION_ITERS,
    stats: RunStats | None = None,
) -> GreatCircle:
    """Draw a circle from ``tau`` conditioned on hitting ``p``."""
    tau = boundary_measure(p)
    normal = _propose(p.vertex_array if not p.is_hemisphere else np.empty((0, 3)), rng, max_iters, tau, stats)
    return GreatCircle(UnitVec.of(normal))


def _total_rate(tess: Tessellation) -> tuple[list[int], np.ndarray]:
    ids = list(tess.cells)
    rates = np.fromiter((tess.cells[c].perimeter for c in ids), dtype=float, count=len(ids))
    return ids, np.cumsum(rates)


def _jump(
    tess: Tessellation,
    rng: np.random.Generator,
    cell_ids: list[int],
    cumulative: np.ndarray,
    max_rejection_iters: int,
    degeneracy_retries: int,
    stats: RunStats,
) -> SplitEvent:
    """Pick a cell proportionally to its rate and split it."""
    k = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    cell_id = cell_ids[min(k, len(cell_ids) - 1)]
    cell = tess.cells[cell_id]
    vertices = tess.vertex_points(cell_id)

    for attempt in range(degeneracy_retries):
        normal = _propose(vertices, rng, max_rejection_iters, cell.perimeter, stats, cell_id)
        circle = GreatCircle(UnitVec.of(normal))
        try:
            split(tess, cell_id, circle)
        except DegenerateEventError as exc:
            stats.degeneracies += 1
            logger.debug("Degenerate split of cell %s resampled: %s", cell_id, exc)
            if attempt + 1 == degeneracy_retries // 2:
                logger.warning("Cell %s needed %d resamples after degenerate splits", cell_id, attempt + 1)
            continue
        stats.splits += 1
        # The chord is the newest carrier and the daughters the newest cells.
        segment = tess.carriers[max(tess.carriers)]
        daughters = tuple(list(tess.cells)[-2:])
        return SplitEvent(
            index=stats.splits - 1,
            time=tess.time,
            cell=cell_id,
            normal=tuple(float(c) for c in circle.normal),
            daughters=daughters,
            segment=segment.id,
            vertices=segment.endpoints,
        )
    raise DegeneracyBudgetExceeded(
        f"Cell {cell_id}: {degeneracy_retries} consecutive degenerate splits"
    )


def _record(tess: Tessellation, event: SplitEvent) -> None:
    if tess.events is not None:
        tess.events.append(event)


def advance(
    tess: Tessellation,
    rng: np.random.Generator,
    max_rejection_iters: int = DEFAULT_MAX_REJECTION_ITERS,
    degeneracy_retries: int = DEFAULT_DEGENERACY_RETRIES,
    stats: RunStats | None = None,
) -> tuple[Tessellation, float]:
    """Apply exactly one jump; returns the tessellation and the waiting time."""
    if not tess.cells:
        raise ParameterError("Tessellation has no cells")
    stats = stats if stats is not None else RunStats()
    cell_ids, cumulative = _total_rate(tess)
    dt = float(rng.exponential(1.0 / cumulative[-1]))
    tess.time += dt
    _record(tess, _jump(tess, rng, cell_ids, cumulative, max_rejection_iters, degeneracy_retries, stats))
    return tess, dt


def evolve(
    tess: Tessellation,
    rng: np.random.Generator,
    config: ProcessConfig,
    stats: RunStats | None = None,
) -> Tessellation:
    """Run jumps until the next one would pass ``config.t_max``; freeze there."""
    stats = stats if stats is not None else RunStats()
    while True:
        cell_ids, cumulative = _total_rate(tess)
        dt = float(rng.exponential(1.0 / cumulative[-1]))
        if tess.time + dt > config.t_max:
            break
        tess.time += dt
        event = _jump(tess, rng, cell_ids, cumulative, config.max_rejection_iters, config.degeneracy_retries, stats)
        _record(tess, event)
        if config.check_invariants:
            problems = validate(tess)
            if problems:
                raise InvariantViolationError(problems)
    tess.time = config.t_max
    tess.run_stats = stats
    get_metrics().record_realization(stats.splits, stats.proposals, stats.degeneracies)
    return tess


def run(config: ProcessConfig) -> Tessellation:
    """Simulate one realization from the two hemispheres up to ``config.t_max``."""
    tess = initial()
    if config.record_events:
        tess.events = []
    return evolve(tess, make_rng(config.seed), config)


def _replicate_one(
    task: Callable[[Tessellation], R],
    simulate: Callable[[ProcessConfig], Tessellation],
    config: ProcessConfig,
    index: int,
) -> R:
    return task(simulate(config.model_copy(update={"seed": derive_seed(config.seed, index)})))


def map_replications(
    task: Callable[[Tessellation], R],
    config: ProcessConfig,
    reps: int,
    jobs: int = 1,
    simulate: Callable[[ProcessConfig], Tessellation] = run,
) -> Iterator[R]:
    """Yield ``task(realization_i)`` for ``i = 0 .. reps-1`` in index order.

    Replication ``i`` uses seed ``derive_seed(config.seed, i)``, so the output
    does not depend on ``jobs``. ``task`` and ``simulate`` must be module-level
    functions when ``jobs > 1``.
    """
    if reps < 1:
        raise ParameterError("reps must be >= 1")
    if jobs < 1:
        raise ParameterError("jobs must be >= 1")
    tracer = get_tracer()
    started = time.perf_counter()
    logger.info("Replicating t=%s reps=%d jobs=%d seed=%d", config.t_max, reps, jobs, config.seed)
    with tracer.batch_span("replicate", config.t_max, config.seed, reps, {"stit.jobs": jobs}):
        if jobs == 1:
            for index in range(reps):
                yield _replicate_one(task, simulate, config, index)
        else:
            chunksize = max(1, reps // (8 * jobs))
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                yield from pool.map(
                    _replicate_one,
                    repeat(task),
                    repeat(simulate),
                    repeat(config),
                    range(reps),
                    chunksize=chunksize,
                )
    elapsed = time.perf_counter() - started
    get_metrics().record_batch_duration(elapsed, {"t": config.t_max})
    logger.info("Finished %d replications in %.2fs", reps, elapsed)


def replicate(config: ProcessConfig, reps: int, jobs: int = 1) -> Iterator[RealizationSummary]:
    """Summaries of ``reps`` independent realizations."""
    return map_replications(summarize, config, reps, jobs)


def first_jump(config: ProcessConfig) -> tuple[float, int]:
    """Waiting time and hemisphere (+1 or -1) of the first split from the initial state."""
    tess = initial()
    rng = make_rng(config.seed)
    cell_ids = list(tess.cells)
    hemispheres = {cid: tess.cells[cid].hemisphere for cid in cell_ids}
    _, dt = advance(tess, rng, config.max_rejection_iters, config.degeneracy_retries)
    split_cell = next(c for c in cell_ids if c not in tess.cells)
    return dt, hemispheres[split_cell]


def daughter_segment_counts(
    config: ProcessConfig, first_circle: Optional[GreatCircle] = None
) -> tuple[int, int] | None:
    """Segments descended from each daughter of the first split of the upper hemisphere.

    With ``first_circle`` the upper hemisphere is split by that circle at time
    zero, so the two daughters start from a fixed configuration. Returns
    ``None`` when the upper hemisphere was never split.
    """
    tess = initial()
    upper = next(cid for cid, cell in tess.cells.items() if cell.hemisphere > 0)
    if first_circle is not None:
        split(tess, upper, first_circle)
    tess = evolve(tess, make_rng(config.seed), config)

    segments = sorted((c for c in tess.segments() if c.hemisphere > 0), key=lambda c: c.id)
    if not segments:
        return None
    root = segments[0].split_cell
    daughters = sorted(cid for cid, parent in tess.parents.items() if parent == root)
    counts = dict.fromkeys(daughters, 0)
    for segment in segments[1:]:
        cid = segment.split_cell
        while cid not in counts:
            cid = tess.parents[cid]
        counts[cid] += 1
    return counts[daughters[0]], counts[daughters[1]]


__all__ = [
    "DEFAULT_MAX_REJECTION_ITERS",
    "DEFAULT_DEGENERACY_RETRIES",
    "ProcessConfig",
    "RunStats",
    "SplitEvent",
    "derive_seed",
    "make_rng",
    "sample_split_circle",
    "advance",
    "evolve",
    "run",
    "map_replications",
    "replicate",
    "first_jump",
    "daughter_segment_counts",
]
