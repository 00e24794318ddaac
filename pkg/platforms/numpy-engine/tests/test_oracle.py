import math

import pytest

from stit_sphere.errors import EstimationError, ParameterError
from stit_sphere.stats.oracle import (
    ADJACENCY_FORMULAS,
    EXACT_ADJACENCIES,
    OPEN_ADJACENCIES,
    closed_form,
    planar_limits,
)


def test_intensities_at_t_one():
    o = closed_form(1.0)
    assert o.cell_intensity == pytest.approx(5.0)
    assert o.edge_intensity == pytest.approx(9.0)
    assert o.vertex_intensity == pytest.approx(6.0)
    assert o.segment_intensity == pytest.approx(3.0)
    assert o.side_intensity == pytest.approx(12.0 + 2.0 * math.exp(-1.0))


def test_lengths_at_t_one():
    o = closed_form(1.0)
    assert o.total_edge_length == pytest.approx(2 * math.pi * (2.0 - math.exp(-2.0)))
    assert o.total_segment_length == pytest.approx(2 * math.pi)
    assert o.total_side_length == pytest.approx(8 * math.pi)
    assert o.mean_cell_area == pytest.approx(4 * math.pi / 5)
    assert o.mean_segment_length == pytest.approx(2 * math.pi / 3)


def test_adjacency_values_at_t_one():
    o = closed_form(1.0)
    assert o.adjacency("ZV") == pytest.approx(18 / 5)
    assert o.adjacency("MV") == pytest.approx(8 / 3)
    assert o.adjacency("EM") == pytest.approx(5 / 9)
    assert o.adjacency("mv") == o.adjacency("MV")
    assert o.segment_interior_vertices == pytest.approx(2 / 3)


def test_values_at_time_zero():
    o = closed_form(0.0)
    values = o.as_dict()
    assert values["lambda_Z"] == 2.0
    assert values["lambda_V"] == 0.0
    assert values["L_S"] == pytest.approx(4 * math.pi)
    assert values["L_E"] == pytest.approx(0.0)
    assert "a_Z" not in values
    with pytest.raises(EstimationError, match="undefined"):
        o.mean_cell_area
    with pytest.raises(EstimationError):
        o.adjacency("ZV")


def test_open_pairs_have_no_value():
    o = closed_form(2.0)
    for pair in OPEN_ADJACENCIES:
        assert o.adjacency(pair) is None
    with pytest.raises(ParameterError, match="Unknown"):
        o.adjacency("QQ")


def test_exact_pairs_are_constant():
    for pair in EXACT_ADJACENCIES:
        values = {ADJACENCY_FORMULAS[pair](t) for t in (0.1, 1.0, 10.0)}
        assert len(values) == 1


def test_negative_time_is_rejected():
    with pytest.raises(ParameterError):
        closed_form(-0.5)
    with pytest.raises(ParameterError):
        closed_form(math.nan)


def test_planar_limits_are_approached():
    o = closed_form(1e6)
    values = o.as_dict()
    values.update(
        segment_interior_vertices=o.segment_interior_vertices,
        side_interior_vertices=o.side_interior_vertices,
    )
    for name, limit in planar_limits().items():
        assert values[name] == pytest.approx(limit, rel=1e-4)


def test_euler_relation_in_mean():
    for t in (0.3, 1.0, 4.0):
        o = closed_form(t)
        assert o.vertex_intensity - o.edge_intensity + o.cell_intensity == pytest.approx(2.0)
