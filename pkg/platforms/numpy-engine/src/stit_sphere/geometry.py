"""
Spherical geometry primitives for the unit sphere.

Measures follow the normalised conventions used throughout the package:

- ``sigma_1``: length, a full great circle has measure 1.
- ``sigma_2``: area, the whole sphere has measure 1.
- ``tau``: the invariant probability on great circles, obtained by drawing a
  uniform normal. A set of circles ``[B]`` hitting ``B`` has measure
  ``tau([B])``; for a convex polygon this equals ``sigma_1`` of its boundary.

Points and normals are plain 3-vectors. ``UnitVec`` is the immutable public
value; internal hot loops work on ``numpy`` arrays of shape ``(..., 3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import GeometryError, InvalidCellError, ParameterError

# Zero band for sign predicates.
SIGN_TOLERANCE = 1e-12
# Minimal angular separation between a new chord endpoint and existing vertices.
VERTEX_TOLERANCE = 1e-10
# Points must lie on their carrier circle to this tolerance.
ON_CIRCLE_TOLERANCE = 1e-10
TWO_PI = 2.0 * math.pi


class UnitVec(NamedTuple):
    """A point of the unit sphere (also used for circle normals)."""

    x: float
    y: float
    z: float

    @classmethod
    def of(cls, v: Sequence[float] | np.ndarray) -> "UnitVec":
        """Normalise ``v`` and return it as a ``UnitVec``.

        Raises:
            GeometryError: If ``v`` has (numerically) zero length.
        """
        arr = np.asarray(v, dtype=float)
        norm = float(np.linalg.norm(arr))
        if not np.isfinite(norm) or norm < 1e-300:
            raise GeometryError(f"Cannot normalise vector {arr!r}")
        arr = arr / norm
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    @classmethod
    def from_spherical(cls, colatitude: float, longitude: float) -> "UnitVec":
        s = math.sin(colatitude)
        return cls.of((s * math.cos(longitude), s * math.sin(longitude), math.cos(colatitude)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self, dtype=float)

    def __neg__(self) -> "UnitVec":
        return UnitVec(-self.x, -self.y, -self.z)


NORTH_POLE = UnitVec(0.0, 0.0, 1.0)
SOUTH_POLE = UnitVec(0.0, 0.0, -1.0)


def canonical_normal(n: Sequence[float] | np.ndarray) -> UnitVec:
    """Pick the sign representative with ``z > 0``; ties broken on ``(x, y)``."""
    u = UnitVec.of(n)
    for component in (u.z, u.x, u.y):
        if component > 0.0:
            return u
        if component < 0.0:
            return -u
    raise GeometryError("Zero normal")  # pragma: no cover - excluded by UnitVec.of


@dataclass(frozen=True)
class GreatCircle:
    """A great circle, identified with its canonical unit normal."""

    normal: UnitVec

    def __post_init__(self) -> None:
        object.__setattr__(self, "normal", canonical_normal(self.normal))

    @classmethod
    def through(cls, a: Sequence[float], b: Sequence[float]) -> "GreatCircle":
        """The circle through two non-parallel points."""
        return cls(UnitVec.of(np.cross(np.asarray(a, float), np.asarray(b, float))))

    @property
    def array(self) -> np.ndarray:
        return self.normal.array

    def is_equator(self) -> bool:
        return self.normal == NORTH_POLE


EQUATOR = GreatCircle(NORTH_POLE)


def _sign(value: float) -> int:
    if value > SIGN_TOLERANCE:
        return 1
    if value < -SIGN_TOLERANCE:
        return -1
    return 0


def side_of_normal(normal: Sequence[float], x: Sequence[float]) -> int:
    """Sign of ``<normal, x>`` with the zero band, for a raw (non-canonical) normal."""
    return _sign(float(np.dot(np.asarray(normal, float), np.asarray(x, float))))


def side_of(g: GreatCircle, x: Sequence[float]) -> int:
    """Return +1, 0 or -1 according to the side of ``g`` on which ``x`` lies."""
    return side_of_normal(g.normal, x)


def oriented_angle(axis: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Rotation angle in ``[0, 2*pi)`` taking ``a`` to ``b`` counter-clockwise about ``axis``."""
    angle = math.atan2(float(np.dot(axis, np.cross(a, b))), float(np.dot(a, b)))
    if angle < 0.0:
        angle += TWO_PI
    return angle


def angular_distance(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(np.dot(a, b)))


def rotate_about(axis: np.ndarray, x: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation of ``x`` about the unit ``axis``."""
    c, s = math.cos(angle), math.sin(angle)
    return x * c + np.cross(axis, x) * s + axis * float(np.dot(axis, x)) * (1.0 - c)


@dataclass(frozen=True)
class Arc:
    """A geodesic arc on ``circle`` from ``a`` to ``b``.

    ``ccw`` selects the arc traversed counter-clockwise about the canonical
    normal; ``False`` selects the complementary one. ``full`` marks a whole
    circle, which has no endpoints.
    """

    circle: GreatCircle
    a: UnitVec | None = None
    b: UnitVec | None = None
    ccw: bool = True
    full: bool = False

    def __post_init__(self) -> None:
        if self.full:
            return
        if self.a is None or self.b is None:
            raise GeometryError("Arc needs two endpoints unless it is a full circle")
        n = self.circle.array
        for point in (self.a, self.b):
            if abs(float(np.dot(n, point))) > ON_CIRCLE_TOLERANCE:
                raise GeometryError(f"Endpoint {point} is not on the carrier circle")
        if angular_distance(self.a, self.b) <= VERTEX_TOLERANCE:
            raise GeometryError("Arc endpoints coincide")

    @classmethod
    def full_circle(cls, circle: GreatCircle) -> "Arc":
        return cls(circle=circle, full=True)

    @property
    def angle(self) -> float:
        """Unnormalised arc angle in radians."""
        if self.full:
            return TWO_PI
        axis = self.circle.array if self.ccw else -self.circle.array
        return oriented_angle(axis, np.asarray(self.a, float), np.asarray(self.b, float))


def arc_length(arc: Arc) -> float:
    """``sigma_1`` length of an arc (full circle = 1)."""
    return arc.angle / TWO_PI


class IntrinsicVolumes(NamedTuple):
    v0: float
    v1: float
    v2: float


# Conventions for degenerate sets, taken as given rather than derived from the
# Steiner expansion: a great circle has v0 = 0 and v1 = 1, a point v0 = 1/2.
_POINT_VOLUMES = IntrinsicVolumes(0.5, 0.0, 0.0)
_GREAT_CIRCLE_VOLUMES = IntrinsicVolumes(0.0, 1.0, 0.0)


@dataclass(frozen=True)
class SphericalPolygon:
    """A spherically convex polygon.

    The boundary is stored as cyclic vertices in counter-clockwise order
    (interior on the left) and one inward normal per boundary arc: arc ``i``
    runs from ``vertices[i]`` to ``vertices[i + 1]`` on the circle with inward
    normal ``normals[i]``. Consecutive arcs may share a carrier (T-junctions).
    A hemisphere has no vertices and a single normal.
    """

    vertices: tuple[UnitVec, ...]
    normals: tuple[UnitVec, ...]

    def __post_init__(self) -> None:
        if not self.vertices:
            if len(self.normals) != 1:
                raise InvalidCellError("A vertex-free polygon must be a hemisphere")
            return
        if len(self.vertices) != len(self.normals) or len(self.vertices) < 2:
            raise InvalidCellError(
                f"Polygon needs matching vertices and arcs (got {len(self.vertices)} and {len(self.normals)})"
            )

    # Constructors -----------------------------------------------------------

    @classmethod
    def hemisphere(cls, normal: Sequence[float]) -> "SphericalPolygon":
        """The closed hemisphere ``{x : <normal, x> >= 0}``."""
        return cls(vertices=(), normals=(UnitVec.of(normal),))

    @classmethod
    def from_normals(cls, normals: Iterable[Sequence[float]]) -> "SphericalPolygon":
        """Intersection of hemispheres given in counter-clockwise boundary order."""
        ms = [UnitVec.of(m) for m in normals]
        if len(ms) < 2:
            raise InvalidCellError("At least two hemispheres are needed")
        k = len(ms)
        verts = []
        for i in range(k):
            # vertex between arc i-1 and arc i
            prev, cur = np.asarray(ms[i - 1]), np.asarray(ms[i])
            cross = np.cross(prev, cur)
            if np.linalg.norm(cross) < SIGN_TOLERANCE:
                raise InvalidCellError("Consecutive hemispheres coincide")
            verts.append(UnitVec.of(cross))
        polygon = cls(vertices=tuple(verts), normals=tuple(ms))
        polygon._check_convex()
        return polygon

    @classmethod
    def from_vertices(cls, points: Iterable[Sequence[float]]) -> "SphericalPolygon":
        """Convex polygon from vertices listed counter-clockwise seen from outside."""
        vs = [UnitVec.of(p) for p in points]
        if len(vs) < 3:
            raise InvalidCellError("A polygon from vertices needs at least three of them")
        ms = []
        for i, v in enumerate(vs):
            nxt = np.asarray(vs[(i + 1) % len(vs)])
            ms.append(UnitVec.of(np.cross(np.asarray(v), nxt)))
        polygon = cls(vertices=tuple(vs), normals=tuple(ms))
        polygon._check_convex()
        return polygon

    @classmethod
    def lune(cls, first: Sequence[float], second: Sequence[float]) -> "SphericalPolygon":
        """Intersection of two hemispheres with distinct boundary circles."""
        m1, m2 = np.asarray(UnitVec.of(first)), np.asarray(UnitVec.of(second))
        cross = np.cross(m1, m2)
        if np.linalg.norm(cross) < SIGN_TOLERANCE:
            raise InvalidCellError("Lune needs two distinct circles")
        w = cross / np.linalg.norm(cross)
        # Arc on circle 1 runs from -w to w counter-clockwise about m1.
        return cls(vertices=(UnitVec.of(-w), UnitVec.of(w)), normals=(UnitVec.of(m1), UnitVec.of(m2)))

    @classmethod
    def regular(cls, center: Sequence[float], radius: float, sides: int) -> "SphericalPolygon":
        """Regular polygon inscribed in the cap of angular ``radius`` about ``center``."""
        if sides < 3:
            raise ParameterError("sides must be >= 3")
        c = np.asarray(UnitVec.of(center))
        helper = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = np.cross(c, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(c, e1)
        phis = np.arange(sides) * (TWO_PI / sides)
        pts = (
            math.cos(radius) * c[None, :]
            + math.sin(radius) * (np.cos(phis)[:, None] * e1 + np.sin(phis)[:, None] * e2)
        )
        return cls.from_vertices(pts)

    # Derived data -------------------------------------------------------------

    @property
    def is_hemisphere(self) -> bool:
        return not self.vertices

    @property
    def vertex_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float).reshape(-1, 3)

    @property
    def normal_array(self) -> np.ndarray:
        return np.asarray(self.normals, dtype=float).reshape(-1, 3)

    def arc_angles(self) -> np.ndarray:
        if self.is_hemisphere:
            return np.array([TWO_PI])
        vs = self.vertex_array
        ms = self.normal_array
        k = len(vs)
        return np.array([oriented_angle(ms[i], vs[i], vs[(i + 1) % k]) for i in range(k)])

    def arcs(self) -> list[Arc]:
        if self.is_hemisphere:
            return [Arc.full_circle(GreatCircle(self.normals[0]))]
        out = []
        k = len(self.vertices)
        for i, m in enumerate(self.normals):
            circle = GreatCircle(m)
            out.append(
                Arc(
                    circle=circle,
                    a=self.vertices[i],
                    b=self.vertices[(i + 1) % k],
                    ccw=float(np.dot(circle.array, m)) > 0.0,
                )
            )
        return out

    def contains(self, x: Sequence[float] | np.ndarray, tol: float = SIGN_TOLERANCE) -> np.ndarray | bool:
        """Membership for one point or an ``(n, 3)`` array of points."""
        pts = np.asarray(x, dtype=float)
        inside = np.all(pts.reshape(-1, 3) @ self.normal_array.T >= -tol, axis=1)
        return bool(inside[0]) if pts.ndim == 1 else inside

    def _check_convex(self) -> None:
        vs = self.vertex_array
        if np.any(vs @ self.normal_array.T < -1e-9):
            raise InvalidCellError("Boundary circles do not bound a convex polygon in the given order")
        if polygon_area(self) <= SIGN_TOLERANCE:
            raise InvalidCellError("Polygon has empty interior")


def polygon_area(p: SphericalPolygon) -> float:
    """Unnormalised area via Gauss-Bonnet: ``2*pi`` minus the total turning at corners."""
    if p.is_hemisphere:
        return TWO_PI
    ms = p.normal_array
    following = np.roll(ms, -1, axis=0)
    # Turning at the corner between arc i and arc i + 1; zero at T-junctions.
    turning = np.arctan2(
        np.linalg.norm(np.cross(ms, following), axis=1), np.einsum("ij,ij->i", ms, following)
    )
    return TWO_PI - float(turning.sum())


def _require_interior(p: SphericalPolygon) -> float:
    area = polygon_area(p)
    if area <= SIGN_TOLERANCE:
        raise InvalidCellError("Polygon has empty interior")
    return area


def boundary_measure(p: SphericalPolygon) -> float:
    """``tau([p])``, equal to the ``sigma_1`` length of the boundary."""
    _require_interior(p)
    return float(p.arc_angles().sum()) / TWO_PI


def intrinsic_volumes(p: SphericalPolygon | Arc | UnitVec) -> IntrinsicVolumes:
    """Spherical intrinsic volumes ``(v0, v1, v2)`` of a convex set.

    Polygons with interior use Gauss-Bonnet. A point and a proper arc share
    ``v0 = 1/2``; an arc adds its ``sigma_1`` length as ``v1``. A full great
    circle has ``(0, 1, 0)``.
    """
    if isinstance(p, UnitVec):
        return _POINT_VOLUMES
    if isinstance(p, Arc):
        if p.full:
            return _GREAT_CIRCLE_VOLUMES
        return _POINT_VOLUMES._replace(v1=arc_length(p))
    area = _require_interior(p)
    perimeter = float(p.arc_angles().sum()) / TWO_PI
    return IntrinsicVolumes(
        v0=(TWO_PI - area) / (4.0 * math.pi),
        v1=perimeter / 2.0,
        v2=area / (4.0 * math.pi),
    )


def _vertex_signs(normals: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    d = normals @ vertices.T
    return np.where(d > SIGN_TOLERANCE, 1, np.where(d < -SIGN_TOLERANCE, -1, 0))


def meets_vertex_hull(normals: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Circles of a batch whose vertex signs are not all strictly equal."""
    signs = _vertex_signs(normals, vertices)
    return ~(np.all(signs == 1, axis=1) | np.all(signs == -1, axis=1))


def hits_many(normals: np.ndarray, p: SphericalPolygon) -> np.ndarray:
    """Vectorised ``hits`` for an ``(n, 3)`` array of circle normals."""
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    if p.is_hemisphere:
        return np.ones(len(normals), dtype=bool)
    return meets_vertex_hull(normals, p.vertex_array)


def hits(g: GreatCircle, p: SphericalPolygon) -> bool:
    """True iff the great circle meets the (closed) polygon."""
    return bool(hits_many(g.array[None, :], p)[0])


def uniform_point(rng: np.random.Generator) -> UnitVec:
    """A uniform point of the sphere."""
    return UnitVec.of(rng.standard_normal(3))


def uniform_points(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` uniform points as an ``(n, 3)`` array."""
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _circle_frames(normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases ``(e1, e2)`` of the planes with the given normals."""
    helper = np.zeros_like(normals)
    use_y = np.abs(normals[:, 0]) > 0.9
    helper[~use_y, 0] = 1.0
    helper[use_y, 1] = 1.0
    e1 = np.cross(normals, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(normals, e1)
    return e1, e2


def chord_angles(normals: np.ndarray, p: SphericalPolygon) -> np.ndarray:
    """Angle (radians) of ``p`` intersected with each circle of an ``(n, 3)`` batch.

    Each hemisphere of ``p`` meets a circle in a closed half circle; the chord is
    the intersection of those half circles. Its angle is ``pi`` minus the
    spread of their midpoints, or zero when the spread reaches ``pi``.
    """
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    e1, e2 = _circle_frames(normals)
    ms = p.normal_array
    centres = np.arctan2(np.einsum("nk,mk->nm", e2, ms), np.einsum("nk,mk->nm", e1, ms))
    if ms.shape[0] == 1:
        return np.full(len(normals), math.pi)
    centres = np.sort(np.mod(centres, TWO_PI), axis=1)
    gaps = np.diff(centres, axis=1)
    wrap = centres[:, 0] + TWO_PI - centres[:, -1]
    largest_gap = np.maximum(gaps.max(axis=1), wrap)
    spread = TWO_PI - largest_gap
    return np.maximum(0.0, math.pi - spread)


def crofton_mc(
    p: SphericalPolygon,
    n: int,
    rng: np.random.Generator,
    order: int = 1,
) -> tuple[float, float]:
    """Monte Carlo integral of an intrinsic volume of ``p`` cut by random circles.

    With ``order=1`` the integrand is ``v1`` of the chord (its ``sigma_1``
    length) and the integral equals ``v2(p)``; with ``order=0`` it is ``v0`` of
    the chord (1/2 for a non-empty chord) and the integral equals ``v1(p)``.

    Returns:
        ``(estimate, standard_error)``.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if order not in (0, 1):
        raise ParameterError("order must be 0 or 1")
    angles = chord_angles(uniform_points(rng, n), p)
    if order == 1:
        values = angles / TWO_PI
    else:
        values = np.where(angles > 0.0, _POINT_VOLUMES.v0, 0.0)
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(values.mean()), se


def distance_to_polygon(p: SphericalPolygon, x: np.ndarray) -> np.ndarray:
    """Geodesic distance from each point of an ``(n, 3)`` array to the polygon."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if p.is_hemisphere:
        d = pts @ p.normal_array[0]
        return np.arcsin(np.clip(np.maximum(-d, 0.0), 0.0, 1.0))
    inside = p.contains(pts, tol=0.0)
    best = np.full(len(pts), np.inf)
    vs = p.vertex_array
    k = len(vs)
    for i, m in enumerate(p.normal_array):
        a, b = vs[i], vs[(i + 1) % k]
        span = oriented_angle(m, a, b)
        dots = pts @ m
        proj = pts - dots[:, None] * m
        norms = np.linalg.norm(proj, axis=1)
        safe = norms > 1e-15
        q = np.where(safe[:, None], proj / np.where(safe, norms, 1.0)[:, None], a)
        # position of the foot point along the arc, measured from a
        along = np.mod(np.arctan2(np.cross(a, q) @ m, q @ a), TWO_PI)
        on_arc = safe & (along <= span)
        to_circle = np.arcsin(np.clip(np.abs(dots), 0.0, 1.0))
        to_ends = np.minimum(
            np.arccos(np.clip(pts @ a, -1.0, 1.0)),
            np.arccos(np.clip(pts @ b, -1.0, 1.0)),
        )
        best = np.minimum(best, np.where(on_arc, to_circle, to_ends))
    return np.where(inside, 0.0, best)


def tube_measure(p: SphericalPolygon, eps: float) -> float:
    """``sigma_2`` of the ``eps``-neighbourhood from the Steiner formula."""
    if not 0.0 < eps < math.pi / 2:
        raise ParameterError("eps must lie in (0, pi/2)")
    v = intrinsic_volumes(p)
    return (1.0 - math.cos(eps)) * v.v0 + math.sin(eps) * v.v1 + v.v2


def tube_measure_mc(
    p: SphericalPolygon, eps: float, n: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo counterpart of :func:`tube_measure`."""
    if n < 2:
        raise ParameterError("n must be >= 2")
    if not 0.0 < eps < math.pi / 2:
        raise ParameterError("eps must lie in (0, pi/2)")
    hit = distance_to_polygon(p, uniform_points(rng, n)) <= eps
    estimate = float(hit.mean())
    return estimate, math.sqrt(max(estimate * (1.0 - estimate), 0.0) / n)


@dataclass(frozen=True)
class SphericalCap:
    """Closed cap of angular radius ``theta`` about ``center``."""

    center: UnitVec
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", UnitVec.of(self.center))
        if not 0.0 < self.theta < math.pi / 2:
            raise GeometryError(f"Cap radius must lie in (0, pi/2), got {self.theta}")

    @classmethod
    def at(cls, colatitude: float, longitude: float, theta: float) -> "SphericalCap":
        return cls(UnitVec.from_spherical(colatitude, longitude), theta)

    @property
    def tau(self) -> float:
        """``tau([C])``: the circumference ``2*pi*sin(theta)`` normalised."""
        return math.sin(self.theta)

    def hit_by(self, normals: np.ndarray) -> np.ndarray:
        """Which circles of an ``(n, 3)`` normal batch meet the cap."""
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        return np.abs(normals @ np.asarray(self.center)) <= math.sin(self.theta) + SIGN_TOLERANCE

    def contains(self, x: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        return pts @ np.asarray(self.center) >= math.cos(self.theta) - SIGN_TOLERANCE


def check_cap_pair(c1: SphericalCap, c2: SphericalCap) -> None:
    """Require two disjoint caps lying in a common open hemisphere."""
    gap = angular_distance(c1.center, c2.center)
    if gap <= c1.theta + c2.theta:
        raise GeometryError("Caps overlap")
    if gap + c1.theta + c2.theta >= math.pi:
        raise GeometryError("Caps do not lie in a common open hemisphere")


def _separates_many(normals: np.ndarray, c1: SphericalCap, c2: SphericalCap) -> np.ndarray:
    d1 = normals @ np.asarray(c1.center)
    d2 = normals @ np.asarray(c2.center)
    miss = (np.abs(d1) > math.sin(c1.theta) + SIGN_TOLERANCE) & (
        np.abs(d2) > math.sin(c2.theta) + SIGN_TOLERANCE
    )
    return miss & (d1 * d2 < 0.0)


def _hull_hit_many(normals: np.ndarray, c1: SphericalCap, c2: SphericalCap) -> np.ndarray:
    return c1.hit_by(normals) | c2.hit_by(normals) | _separates_many(normals, c1, c2)


def separates(g: GreatCircle, c1: SphericalCap, c2: SphericalCap) -> bool:
    """True iff ``g`` misses both caps and has their centres on opposite sides."""
    check_cap_pair(c1, c2)
    return bool(_separates_many(g.array[None, :], c1, c2)[0])


def tau_separating_mc(
    c1: SphericalCap, c2: SphericalCap, n: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo estimate of ``tau([C1|C2])`` with its binomial standard error."""
    check_cap_pair(c1, c2)
    if n < 1:
        raise ParameterError("n must be >= 1")
    hit = _separates_many(uniform_points(rng, n), c1, c2)
    p = float(hit.mean())
    return p, math.sqrt(p * (1.0 - p) / n)


def normal_grid(n_z: int, n_phi: int) -> Iterable[np.ndarray]:
    """Equal-area midpoint grid of normals, yielded one ``z`` row at a time."""
    phis = (np.arange(n_phi) + 0.5) * (TWO_PI / n_phi)
    cos_phi, sin_phi = np.cos(phis), np.sin(phis)
    for z in -1.0 + (np.arange(n_z) + 0.5) * (2.0 / n_z):
        r = math.sqrt(max(0.0, 1.0 - z * z))
        yield np.column_stack([r * cos_phi, r * sin_phi, np.full(n_phi, z)])


def _grid_fraction(predicate, n_z: int, n_phi: int) -> float:
    if n_z < 1 or n_phi < 1:
        raise ParameterError("grid sizes must be positive")
    total = 0
    for row in normal_grid(n_z, n_phi):
        total += int(np.count_nonzero(predicate(row)))
    return total / (n_z * n_phi)


def tau_separating_quadrature(
    c1: SphericalCap, c2: SphericalCap, n_z: int = 1024, n_phi: int = 2048
) -> float:
    """Grid quadrature of ``tau([C1|C2])`` over normal directions."""
    check_cap_pair(c1, c2)
    return _grid_fraction(lambda row: _separates_many(row, c1, c2), n_z, n_phi)


def tau_hull_quadrature(
    c1: SphericalCap, c2: SphericalCap, n_z: int = 1024, n_phi: int = 2048
) -> float:
    """Grid quadrature of ``tau`` for circles hitting the convex hull of two caps."""
    check_cap_pair(c1, c2)
    return _grid_fraction(lambda row: _hull_hit_many(row, c1, c2), n_z, n_phi)


def tau_hull_mc(
    c1: SphericalCap, c2: SphericalCap, n: int, rng: np.random.Generator
) -> tuple[float, float]:
    check_cap_pair(c1, c2)
    if n < 1:
        raise ParameterError("n must be >= 1")
    hit = _hull_hit_many(uniform_points(rng, n), c1, c2)
    p = float(hit.mean())
    return p, math.sqrt(p * (1.0 - p) / n)


def arcs_meet_cap(
    normals: np.ndarray, starts: np.ndarray, ends: np.ndarray, cap: SphericalCap
) -> np.ndarray:
    """Which arcs of a batch meet a cap.

    Arc ``i`` runs counter-clockwise about ``normals[i]`` from ``starts[i]`` to
    ``ends[i]``. The arc meets the cap when an endpoint lies in it, or when the
    closest point of the carrier circle to the cap centre is on the arc and
    within ``theta`` of the centre.
    """
    c = np.asarray(cap.center)
    cos_t = math.cos(cap.theta)
    endpoint_in = (starts @ c >= cos_t - SIGN_TOLERANCE) | (ends @ c >= cos_t - SIGN_TOLERANCE)
    dots = normals @ c
    foot = c[None, :] - dots[:, None] * normals
    norms = np.linalg.norm(foot, axis=1)
    safe = norms > 1e-15
    foot = foot / np.where(safe, norms, 1.0)[:, None]
    span = np.mod(
        np.arctan2(np.einsum("ij,ij->i", normals, np.cross(starts, ends)), np.einsum("ij,ij->i", starts, ends)),
        TWO_PI,
    )
    along = np.mod(
        np.arctan2(np.einsum("ij,ij->i", normals, np.cross(starts, foot)), np.einsum("ij,ij->i", starts, foot)),
        TWO_PI,
    )
    foot_close = np.abs(dots) <= math.sin(cap.theta) + SIGN_TOLERANCE
    return endpoint_in | (safe & foot_close & (along <= span))


__all__ = [
    "SIGN_TOLERANCE",
    "VERTEX_TOLERANCE",
    "TWO_PI",
    "UnitVec",
    "NORTH_POLE",
    "SOUTH_POLE",
    "GreatCircle",
    "EQUATOR",
    "Arc",
    "SphericalPolygon",
    "SphericalCap",
    "IntrinsicVolumes",
    "canonical_normal",
    "side_of",
    "side_of_normal",
    "oriented_angle",
    "angular_distance",
    "rotate_about",
    "arc_length",
    "polygon_area",
    "boundary_measure",
    "intrinsic_volumes",
    "hits",
    "hits_many",
    "meets_vertex_hull",
    "uniform_point",
    "uniform_points",
    "chord_angles",
    "crofton_mc",
    "distance_to_polygon",
    "tube_measure",
    "tube_measure_mc",
    "check_cap_pair",
    "separates",
    "tau_separating_mc",
    "tau_separating_quadrature",
    "tau_hull_quadrature",
    "tau_hull_mc",
    "normal_grid",
    "arcs_meet_cap",
]
