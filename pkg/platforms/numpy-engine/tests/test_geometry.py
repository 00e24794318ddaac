import math

import numpy as np
import pytest

from stit_sphere.errors import GeometryError, InvalidCellError, ParameterError
from stit_sphere.geometry import (
    EQUATOR,
    Arc,
    GreatCircle,
    SphericalCap,
    SphericalPolygon,
    UnitVec,
    arc_length,
    arcs_meet_cap,
    boundary_measure,
    canonical_normal,
    chord_angles,
    crofton_mc,
    hits,
    hits_many,
    intrinsic_volumes,
    polygon_area,
    separates,
    side_of,
    side_of_normal,
    tau_hull_quadrature,
    tau_separating_quadrature,
    tube_measure,
    tube_measure_mc,
    uniform_points,
)

OCTANT = SphericalPolygon.from_vertices([(1, 0, 0), (0, 1, 0), (0, 0, 1)])


def test_unit_vec_normalises_and_rejects_zero():
    v = UnitVec.of((3.0, 0.0, 4.0))
    assert v == pytest.approx((0.6, 0.0, 0.8))
    with pytest.raises(GeometryError, match="normalise"):
        UnitVec.of((0.0, 0.0, 0.0))


def test_canonical_normal_identifies_antipodes():
    assert canonical_normal((0, 0, -1)) == canonical_normal((0, 0, 1))
    assert GreatCircle(UnitVec(0.0, -1.0, 0.0)) == GreatCircle(UnitVec(0.0, 1.0, 0.0))
    assert EQUATOR.is_equator()


def test_arc_lengths():
    quarter = Arc(EQUATOR, UnitVec(1.0, 0.0, 0.0), UnitVec(0.0, 1.0, 0.0))
    assert arc_length(quarter) == pytest.approx(0.25)
    other_way = Arc(EQUATOR, UnitVec(1.0, 0.0, 0.0), UnitVec(0.0, 1.0, 0.0), ccw=False)
    assert arc_length(other_way) == pytest.approx(0.75)
    assert arc_length(Arc.full_circle(EQUATOR)) == 1.0


def test_arc_endpoint_must_lie_on_circle():
    with pytest.raises(GeometryError, match="not on the carrier"):
        Arc(EQUATOR, UnitVec(1.0, 0.0, 0.0), UnitVec(0.0, 0.0, 1.0))


def test_side_of_flips_with_the_raw_normal(rng):
    normals = uniform_points(rng, 500)
    points = uniform_points(rng, 500)
    for n, x in zip(normals, points):
        assert side_of_normal(n, x) == -side_of_normal(-n, x)
        # Both orientations name the same circle once canonicalised.
        assert side_of(GreatCircle(UnitVec.of(n)), x) == side_of(GreatCircle(UnitVec.of(-n)), x)
    on_circle = np.cross(normals[0], points[0])
    assert side_of_normal(normals[0], on_circle) == side_of_normal(-normals[0], on_circle) == 0


def test_octant_area_and_boundary():
    assert polygon_area(OCTANT) == pytest.approx(math.pi / 2)
    assert boundary_measure(OCTANT) == pytest.approx(0.75)


def test_hemisphere_intrinsic_volumes():
    v = intrinsic_volumes(SphericalPolygon.hemisphere((0, 0, 1)))
    assert v.v0 == pytest.approx(0.0)
    assert v.v1 == pytest.approx(0.5)
    assert v.v2 == pytest.approx(0.5)


def test_lune_intrinsic_volumes():
    lune = SphericalPolygon.lune((0, 0, 1), (1, 0, 0))
    v = intrinsic_volumes(lune)
    assert v.v2 == pytest.approx(0.25)
    assert v.v1 == pytest.approx(0.5)
    assert v.v0 == pytest.approx(0.25)


def test_intrinsic_volumes_sum_to_one_for_polygons():
    # Gauss-Bonnet: v0 + v2 = 1/2 for any polygon with interior.
    for polygon in (OCTANT, SphericalPolygon.regular((0, 0, 1), 0.3, 7)):
        v = intrinsic_volumes(polygon)
        assert v.v0 + v.v2 == pytest.approx(0.5)


def test_small_polygon_looks_like_a_point():
    v = intrinsic_volumes(SphericalPolygon.regular((0, 1, 0), 1e-4, 5))
    assert v.v0 == pytest.approx(0.5, abs=1e-6)
    assert v.v1 == pytest.approx(0.0, abs=1e-3)


def test_degenerate_sets_use_fixed_conventions():
    assert intrinsic_volumes(UnitVec(0.0, 0.0, 1.0)) == (0.5, 0.0, 0.0)
    assert intrinsic_volumes(Arc.full_circle(EQUATOR)) == (0.0, 1.0, 0.0)
    quarter = intrinsic_volumes(Arc(EQUATOR, UnitVec(1.0, 0.0, 0.0), UnitVec(0.0, 1.0, 0.0)))
    assert quarter.v0 == 0.5
    assert quarter.v1 == pytest.approx(0.25)
    assert quarter.v2 == 0.0


def test_from_vertices_rejects_non_convex_input():
    with pytest.raises(InvalidCellError):
        SphericalPolygon.from_vertices([(1, 0, 0), (0, 1, 0)])
    with pytest.raises(ParameterError, match="sides"):
        SphericalPolygon.regular((0, 0, 1), 0.2, 2)


def test_contains_and_hits():
    assert OCTANT.contains(UnitVec.of((1, 1, 1)).array)
    assert not OCTANT.contains(UnitVec.of((-1, 1, 1)).array)
    assert hits(GreatCircle(UnitVec.of((1, -1, 0))), OCTANT)
    assert not hits(GreatCircle(UnitVec.of((1, 1, 1))), OCTANT)


def _boundary_samples(polygon, per_arc=200):
    vs = polygon.vertex_array
    spans = polygon.arc_angles()
    samples = []
    for a, m, span in zip(vs, polygon.normal_array, spans):
        s = np.linspace(0.0, span, per_arc)[:, None]
        samples.append(np.cos(s) * a + np.sin(s) * np.cross(m, a))
    return np.concatenate(samples)


def test_hits_agrees_with_boundary_sampling(rng):
    polygons = []
    for _ in range(160):
        radius = float(rng.uniform(0.05, 1.4))
        sides = int(rng.integers(3, 9))
        polygons.append(SphericalPolygon.regular(uniform_points(rng, 1)[0], radius, sides))
    for _ in range(40):
        first, second = uniform_points(rng, 2)
        polygons.append(SphericalPolygon.lune(first, second))

    disagreements = 0
    for polygon in polygons:
        normals = uniform_points(rng, 50)
        d = normals @ _boundary_samples(polygon).T
        # A circle meets a closed convex polygon iff its boundary changes side.
        sampled = (d.max(axis=1) >= 0.0) & (d.min(axis=1) <= 0.0)
        disagreements += int(np.sum(hits_many(normals, polygon) != sampled))
    assert disagreements == 0


def test_hit_probability_equals_boundary_measure(rng):
    normals = uniform_points(rng, 200_000)
    hit_fraction = float(np.mean(chord_angles(normals, OCTANT) > 0))
    assert hit_fraction == pytest.approx(boundary_measure(OCTANT), abs=0.005)


@pytest.mark.parametrize("order", [0, 1])
def test_crofton_recovers_intrinsic_volumes(rng, order):
    polygon = SphericalPolygon.regular((0.2, 0.3, 0.9), 0.6, 5)
    estimate, se = crofton_mc(polygon, 100_000, rng, order=order)
    v = intrinsic_volumes(polygon)
    target = v.v2 if order == 1 else v.v1
    assert abs(estimate - target) <= 4 * se + 1e-12


def test_crofton_argument_checks(rng):
    with pytest.raises(ParameterError, match="order"):
        crofton_mc(OCTANT, 10, rng, order=2)
    with pytest.raises(ParameterError, match="n must"):
        crofton_mc(OCTANT, 0, rng)


def test_tube_of_hemisphere_is_a_cap():
    hemisphere = SphericalPolygon.hemisphere((0, 0, 1))
    eps = 0.3
    assert tube_measure(hemisphere, eps) == pytest.approx((1 + math.sin(eps)) / 2)


def test_tube_measure_matches_monte_carlo(rng):
    eps = 0.2
    estimate, se = tube_measure_mc(OCTANT, eps, 100_000, rng)
    assert abs(estimate - tube_measure(OCTANT, eps)) <= 4 * se
    with pytest.raises(ParameterError, match="eps"):
        tube_measure(OCTANT, math.pi / 2)


def test_cap_basics():
    cap = SphericalCap.at(math.pi / 4, 0.0, math.pi / 6)
    assert cap.tau == pytest.approx(0.5)
    assert cap.contains(cap.center.array)[0]
    with pytest.raises(GeometryError, match="radius"):
        SphericalCap.at(0.5, 0.0, 2.0)


def test_separating_measure_is_bounded_by_hull():
    c1 = SphericalCap.at(math.pi / 4, 0.0, math.pi / 12)
    c2 = SphericalCap.at(math.pi / 4, math.pi / 2, math.pi / 12)
    separating = tau_separating_quadrature(c1, c2, 256, 512)
    hull = tau_hull_quadrature(c1, c2, 256, 512)
    assert 0.0 < separating < hull < 1.0
    # Separating circles miss both caps, so they add to the cap hits.
    assert hull >= separating + max(c1.tau, c2.tau) - 1e-3
    assert hull <= separating + c1.tau + c2.tau + 1e-3


def test_separates_requires_disjoint_caps():
    c1 = SphericalCap.at(math.pi / 4, 0.0, 0.5)
    c2 = SphericalCap.at(math.pi / 4, 0.1, 0.5)
    with pytest.raises(GeometryError, match="overlap"):
        separates(GreatCircle(UnitVec(1.0, 0.0, 0.0)), c1, c2)


def test_arcs_meet_cap_interior_crossing():
    cap = SphericalCap.at(math.pi / 2, 0.0, 0.1)
    normals = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    starts = np.array([[0.0, -1.0, 0.0], [0.0, 1.0, 0.0]])
    ends = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
    # First arc passes through (1, 0, 0); the second stays in the quadrant x < 0, y > 0.
    assert arcs_meet_cap(normals, starts, ends, cap).tolist() == [True, False]


def test_bisecting_meridian_separates_mirror_caps():
    c1 = SphericalCap.at(math.pi / 4, 0.0, 1e-3)
    c2 = SphericalCap.at(math.pi / 4, math.pi, 1e-3)
    assert separates(GreatCircle(UnitVec(1.0, 0.0, 0.0)), c1, c2)
    # Both centres lie above the equator, and this meridian runs through both caps.
    assert not separates(EQUATOR, c1, c2)
    assert not separates(GreatCircle(UnitVec(0.0, 1.0, 0.0)), c1, c2)
