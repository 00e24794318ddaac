import numpy as np
import pytest

from stit_sphere.errors import EstimationError, ParameterError
from stit_sphere.geometry import EQUATOR, GreatCircle, UnitVec
from stit_sphere.stats.intersection import (
    crossing_counts,
    intersect_with_circle,
    intersection_counts,
    poisson_gof,
)
from stit_sphere.tessellation import initial

Y_PLANE = GreatCircle(UnitVec(0.0, 1.0, 0.0))


def test_initial_state_has_no_crossings():
    crossings = intersect_with_circle(initial(), Y_PLANE)
    assert crossings.counts == (0, 0)
    assert crossings.equator == pytest.approx(np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]))


def test_chord_through_the_pole_is_crossed_once(one_split):
    crossings = intersect_with_circle(one_split, Y_PLANE)
    assert crossings.counts == (1, 0)
    assert crossings.upper[0] == pytest.approx([0.0, 0.0, 1.0])


def test_equator_is_refused(one_split):
    with pytest.raises(ParameterError, match="equator"):
        intersection_counts(one_split, EQUATOR)


def test_crossing_counts_shape():
    counts = crossing_counts(1.0, GreatCircle(UnitVec(1.0, 0.0, 0.0)), 30, seed=9)
    assert counts.shape == (30, 3)
    assert (counts[:, 2] == 2).all()
    assert (counts[:, :2] >= 0).all()


def test_gof_accepts_poisson_sample(rng):
    fit = poisson_gof(rng.poisson(2.0, 5000), 2.0)
    assert fit.p_value > 0.001
    assert fit.bins >= 5


def test_gof_rejects_wrong_distribution():
    fit = poisson_gof(np.zeros(500, dtype=int), 3.0)
    assert fit.p_value < 1e-6


def test_gof_input_checks(rng):
    with pytest.raises(EstimationError, match="at least"):
        poisson_gof([], 1.0)
    with pytest.raises(EstimationError, match="at least"):
        poisson_gof(rng.poisson(1.0, 50), 1.0)
    with pytest.raises(ParameterError, match="positive"):
        poisson_gof(rng.poisson(1.0, 200), 0.0)
    with pytest.raises(EstimationError, match="integers"):
        poisson_gof(np.full(200, 1.5), 1.0)


@pytest.mark.slow
def test_hemisphere_counts_are_poisson_and_uncorrelated():
    t = 1.0
    counts = crossing_counts(t, GreatCircle(UnitVec.of((1.0, 0.5, 0.2))), 5000, seed=21)
    for column in (0, 1):
        assert poisson_gof(counts[:, column], t).p_value > 0.001
    r = np.corrcoef(counts[:, 0], counts[:, 1])[0, 1]
    assert abs(r) < 4 / np.sqrt(len(counts))
