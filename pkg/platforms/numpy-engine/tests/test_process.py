import pickle

import numpy as np
import pytest
from pydantic import ValidationError

from stit_sphere.errors import InvariantViolationError, ParameterError, RejectionLimitError
from stit_sphere.geometry import GreatCircle, SphericalPolygon, UnitVec, boundary_measure
from stit_sphere.process import (
    ProcessConfig,
    RunStats,
    advance,
    daughter_segment_counts,
    derive_seed,
    first_jump,
    map_replications,
    replicate,
    run,
    sample_split_circle,
)
from stit_sphere.tessellation import initial, summarize, validate


def test_config_validation():
    with pytest.raises(ValidationError):
        ProcessConfig(t_max=-1.0, seed=1)
    with pytest.raises(ValidationError):
        ProcessConfig(t_max=1.0, seed=-1)
    config = ProcessConfig(t_max=1.0, seed=2**64 - 1)
    assert config.record_events is False


def test_derive_seed_is_stable_and_spreads():
    seeds = {derive_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(42, 7) == derive_seed(42, 7)
    assert all(0 <= s < 2**64 for s in seeds)


def test_run_at_time_zero_is_the_initial_state():
    tess = run(ProcessConfig(t_max=0.0, seed=5))
    assert tess.time == 0.0
    assert summarize(tess) == summarize(initial())


def test_run_is_reproducible():
    config = ProcessConfig(t_max=2.0, seed=99)
    assert summarize(run(config)) == summarize(run(config))


def test_run_freezes_at_target_time():
    tess = run(ProcessConfig(t_max=1.5, seed=3, record_events=True))
    assert tess.time == 1.5
    times = [event.time for event in tess.events]
    assert times == sorted(times)
    assert all(0.0 < t <= 1.5 for t in times)
    assert len(tess.events) == tess.run_stats.splits == len(tess.segments())


def test_checked_run_keeps_invariants():
    tess = run(ProcessConfig(t_max=2.0, seed=11, check_invariants=True))
    assert validate(tess) == []


def test_advance_applies_one_split(rng):
    tess = initial()
    stats = RunStats()
    tess, dt = advance(tess, rng, stats=stats)
    assert dt > 0
    assert tess.time == dt
    assert stats.splits == 1
    assert len(tess.cells) == 3


def test_replications_do_not_depend_on_jobs():
    config = ProcessConfig(t_max=1.0, seed=2024)
    serial = list(replicate(config, 12, jobs=1))
    parallel = list(replicate(config, 12, jobs=2))
    assert serial == parallel


def test_map_replications_rejects_bad_counts():
    config = ProcessConfig(t_max=1.0, seed=1)
    with pytest.raises(ParameterError, match="reps"):
        list(map_replications(summarize, config, 0))
    with pytest.raises(ParameterError, match="jobs"):
        list(map_replications(summarize, config, 1, jobs=0))


def test_acceptance_rate_matches_boundary_measure(rng):
    octant = SphericalPolygon.from_vertices([(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    stats = RunStats()
    for _ in range(20_000):
        circle = sample_split_circle(octant, rng, stats=stats)
        d = octant.vertex_array @ circle.array
        assert d.min() < 0 < d.max()
    assert stats.acceptance_rate == pytest.approx(boundary_measure(octant), abs=0.01)


def test_rejection_limit_on_a_tiny_cell(rng):
    tiny = SphericalPolygon.regular((0, 0, 1), 1e-5, 3)
    with pytest.raises(RejectionLimitError, match="proposals") as info:
        sample_split_circle(tiny, rng, max_iters=50)
    assert info.value.iterations == 50
    restored = pickle.loads(pickle.dumps(info.value))
    assert restored.iterations == 50


def test_invariant_error_survives_pickling():
    error = pickle.loads(pickle.dumps(InvariantViolationError(["a", "b"])))
    assert error.problems == ["a", "b"]
    assert str(error) == "a; b"


def test_first_jump_distribution():
    n = 4000
    draws = [first_jump(ProcessConfig(t_max=1.0, seed=derive_seed(8, i))) for i in range(n)]
    waits = np.array([d for d, _ in draws])
    upper = np.mean([h > 0 for _, h in draws])
    # Two hemispheres of rate 1 each.
    assert waits.mean() == pytest.approx(0.5, abs=4 * 0.5 / np.sqrt(n))
    assert upper == pytest.approx(0.5, abs=4 * 0.5 / np.sqrt(n))


def test_daughter_counts_with_fixed_first_circle():
    circle = GreatCircle(UnitVec(1.0, 0.0, 0.0))
    counts = daughter_segment_counts(ProcessConfig(t_max=1.0, seed=4), first_circle=circle)
    assert counts is not None
    assert all(c >= 0 for c in counts)


def test_daughter_counts_without_any_split():
    assert daughter_segment_counts(ProcessConfig(t_max=0.0, seed=4)) is None
