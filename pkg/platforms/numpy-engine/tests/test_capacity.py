import math

import pytest
from pydantic import ValidationError

from stit_sphere.errors import ParameterError
from stit_sphere.geometry import GreatCircle, SphericalCap, UnitVec
from stit_sphere.stats.capacity import (
    CapacitySpec,
    capacity_exact,
    capacity_mc,
    capacity_recursion_two_caps,
    tessellation_misses,
    two_cap_closed_form,
    two_cap_terms,
)
from stit_sphere.tessellation import initial, split

QUARTER = math.pi / 4


@pytest.fixture
def two_caps():
    return CapacitySpec(
        caps=[
            SphericalCap.at(QUARTER, 0.0, math.pi / 12),
            SphericalCap.at(QUARTER, math.pi / 2, math.pi / 12),
        ]
    )


def test_single_cap_closed_form():
    spec = CapacitySpec.single(QUARTER, 0.0, math.pi / 6)
    assert spec.hemisphere == 1
    assert capacity_exact(spec, 2.0) == pytest.approx(math.exp(-1.0))
    assert capacity_exact(spec, 0.0) == 1.0


def test_spec_rejects_bad_caps():
    with pytest.raises(ValidationError, match="equator"):
        CapacitySpec.single(math.pi / 2 - 0.1, 0.0, 0.2)
    with pytest.raises(ValidationError, match="same open hemisphere"):
        CapacitySpec(caps=[SphericalCap.at(QUARTER, 0.0, 0.1), SphericalCap.at(3 * QUARTER, 0.0, 0.1)])
    with pytest.raises(ValidationError, match="disjoint"):
        CapacitySpec(caps=[SphericalCap.at(QUARTER, 0.0, 0.3), SphericalCap.at(QUARTER, 0.2, 0.3)])
    with pytest.raises(ValidationError):
        CapacitySpec(caps=[])


def test_point_like_caps_are_never_hit():
    # Zero-size caps: every hull circle separates them and no circle hits them.
    for t in (0.0, 0.5, 3.0):
        assert two_cap_closed_form(t, hull=0.4, single_sum=0.0, separating=0.4) == pytest.approx(1.0)


def test_closed_form_is_continuous_at_equal_rates():
    near = two_cap_closed_form(1.5, hull=0.3 + 1e-9, single_sum=0.3, separating=0.1)
    at = two_cap_closed_form(1.5, hull=0.3, single_sum=0.3, separating=0.1)
    assert near == pytest.approx(at, rel=1e-7)
    assert at == pytest.approx(math.exp(-0.45) + 0.1 * 1.5 * math.exp(-0.45))


def test_recursion_argument_checks(two_caps):
    assert capacity_recursion_two_caps(two_caps, 0.0) == 1.0
    with pytest.raises(ParameterError, match="exactly 2"):
        capacity_recursion_two_caps(CapacitySpec.single(QUARTER, 0.0, 0.2), 1.0)
    with pytest.raises(ParameterError, match="single cap"):
        capacity_exact(two_caps, 1.0)
    with pytest.raises(ParameterError, match="method"):
        two_cap_terms(two_caps, method="simpson")


def test_two_cap_terms_agree_between_methods(two_caps):
    grid = two_cap_terms(two_caps, grid=(256, 512))
    mc = two_cap_terms(two_caps, method="mc", n=200_000, seed=3)
    assert grid.single_sum == pytest.approx(2 * math.sin(math.pi / 12))
    assert mc.hull == pytest.approx(grid.hull, abs=0.01)
    assert mc.separating == pytest.approx(grid.separating, abs=0.01)


def test_misses_on_fixed_states():
    caps = (SphericalCap.at(0.3, 0.0, 0.1),)
    assert tessellation_misses(initial(), caps)
    tess = initial()
    split(tess, 0, GreatCircle(UnitVec(1.0, 0.0, 0.0)))
    # The chord runs through the north pole; the cap sits off it.
    assert tessellation_misses(tess, caps)
    assert not tessellation_misses(tess, (SphericalCap.at(0.3, math.pi / 2, 0.1),))


def test_single_cap_monte_carlo():
    spec = CapacitySpec.single(QUARTER, 0.0, math.pi / 6)
    estimate, se = capacity_mc(spec, 1.0, 2000, seed=17)
    assert abs(estimate - capacity_exact(spec, 1.0)) <= 4 * se


@pytest.mark.slow
def test_two_cap_monte_carlo(two_caps):
    estimate, se = capacity_mc(two_caps, 1.0, 20_000, seed=19)
    exact = capacity_recursion_two_caps(two_caps, 1.0)
    assert abs(estimate - exact) <= 4 * se

