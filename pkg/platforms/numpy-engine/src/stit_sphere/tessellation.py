"""
Incidence model of a tessellation of the sphere and the split operation.

Every edge is stored once, oriented counter-clockwise about the canonical
normal of its carrier circle. A cell keeps its boundary as a cyclic list of
vertex ids and edge ids in counter-clockwise order (interior on the left),
together with one sign per edge: ``+1`` when the cell traverses the edge in
its stored direction (the carrier's canonical normal points inward), ``-1``
otherwise. The two initial hemispheres have no vertices and no edges; their
boundary is the whole equator.

Carriers are the circles edges live on: the equator (id 0), the maximal
segments created by splits, and full circles of the great-circle model.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateEventError, GeometryError, SplitMissError
from .geometry import (
    EQUATOR,
    NORTH_POLE,
    SIGN_TOLERANCE,
    TWO_PI,
    VERTEX_TOLERANCE,
    GreatCircle,
    SphericalPolygon,
    UnitVec,
    angular_distance,
    oriented_angle,
    polygon_area,
    rotate_about,
    uniform_points,
)

logger = logging.getLogger(__name__)

EQUATOR_ID = 0
# Edge-set placeholder for the side of an unsplit hemisphere.
BARE_EQUATOR_EDGE = -1


class CarrierKind(str, Enum):
    EQUATOR = "equator"
    SEGMENT = "segment"
    CIRCLE = "circle"


@dataclass
class CarrierRecord:
    id: int
    circle: GreatCircle
    kind: CarrierKind
    birth_time: float = 0.0
    endpoints: tuple[int, int] | None = None
    split_cell: int | None = None
    hemisphere: int = 0
    length: float = 1.0

    @property
    def normal(self) -> np.ndarray:
        return self.circle.array


@dataclass
class VertexRecord:
    id: int
    point: np.ndarray
    on_equator: bool
    host: int
    creator: int


@dataclass
class EdgeRecord:
    id: int
    carrier: int
    start: int
    end: int
    length: float
    cells: list[int] = field(default_factory=list)


@dataclass
class CellRecord:
    id: int
    hemisphere: int
    vertices: list[int]
    edges: list[int]
    signs: list[int]
    parent: int | None
    birth_time: float
    perimeter: float = 1.0

    @property
    def is_bare(self) -> bool:
        return not self.edges


@dataclass(frozen=True)
class Side:
    """One element of the side multiset: a maximal same-carrier run of a cell boundary."""

    cell: int
    carrier: int
    edges: frozenset[int]
    n_vertices: int
    length: float


@dataclass(frozen=True)
class RealizationSummary:
    """Counts, lengths and incidence totals of one realization."""

    t: float
    cells: int
    edges: int
    vertices: int
    sides: int
    segments: int
    edge_length: float
    segment_length: float
    side_length: float
    equator_vertices: int
    equator_sides: int
    cell_vertex: int
    cell_edge: int
    edge_cell: int
    vertex_edge: int
    side_edge: int
    side_vertex: int
    edge_segment: int
    vertex_segment: int
    side_segment: int
    cell_segment: int
    cell_side: int
    side_side: int
    circles: int = 0

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


class Tessellation:
    """Mutable incidence state; ids are never reused."""

    def __init__(self, side_to_side: bool = False):
        self.side_to_side = side_to_side
        self.time = 0.0
        self.cells: dict[int, CellRecord] = {}
        self.vertices: dict[int, VertexRecord] = {}
        self.edges: dict[int, EdgeRecord] = {}
        self.carriers: dict[int, CarrierRecord] = {
            EQUATOR_ID: CarrierRecord(id=EQUATOR_ID, circle=EQUATOR, kind=CarrierKind.EQUATOR)
        }
        self.parents: dict[int, int | None] = {}
        # Filled by the simulators: optional event log and work counters.
        self.events: list | None = None
        self.run_stats = None
        self._cell_ids = itertools.count()
        self._vertex_ids = itertools.count()
        self._edge_ids = itertools.count()
        self._carrier_ids = itertools.count(EQUATOR_ID + 1)

    # Queries ------------------------------------------------------------------

    def point(self, vertex_id: int) -> np.ndarray:
        return self.vertices[vertex_id].point

    def segments(self) -> list[CarrierRecord]:
        return [c for c in self.carriers.values() if c.kind is CarrierKind.SEGMENT]

    def circles(self) -> list[CarrierRecord]:
        return [c for c in self.carriers.values() if c.kind is CarrierKind.CIRCLE]

    def inward_normals(self, cell_id: int) -> np.ndarray:
        cell = self.cells[cell_id]
        if cell.is_bare:
            return np.array([[0.0, 0.0, float(cell.hemisphere)]])
        return np.array(
            [sign * self.carriers[self.edges[e].carrier].normal for e, sign in zip(cell.edges, cell.signs)]
        )

    def vertex_points(self, cell_id: int) -> np.ndarray:
        cell = self.cells[cell_id]
        return np.array([self.vertices[v].point for v in cell.vertices]).reshape(-1, 3)

    def polygon(self, cell_id: int) -> SphericalPolygon:
        cell = self.cells[cell_id]
        normals = tuple(UnitVec(*m) for m in self.inward_normals(cell_id))
        if cell.is_bare:
            return SphericalPolygon(vertices=(), normals=normals)
        verts = tuple(UnitVec(*self.point(v)) for v in cell.vertices)
        return SphericalPolygon(vertices=verts, normals=normals)

    def cell_rate(self, cell_id: int) -> float:
        """``tau([cell])``, the cell's splitting rate."""
        return self.cells[cell_id].perimeter

    def locate(self, x: np.ndarray) -> list[int]:
        """Ids of the cells whose closed interior contains ``x``."""
        return [cid for cid in self.cells if np.all(self.inward_normals(cid) @ x >= -SIGN_TOLERANCE)]

    # Construction primitives -------------------------------------------------

    def _new_cell(self, hemisphere: int, vertices, edges, signs, parent) -> CellRecord:
        cell = CellRecord(
            id=next(self._cell_ids),
            hemisphere=hemisphere,
            vertices=list(vertices),
            edges=list(edges),
            signs=list(signs),
            parent=parent,
            birth_time=self.time,
        )
        cell.perimeter = sum(self.edges[e].length for e in cell.edges) if cell.edges else 1.0
        self.cells[cell.id] = cell
        self.parents[cell.id] = parent
        return cell

    def _new_vertex(self, point: np.ndarray, host: int, creator: int) -> VertexRecord:
        vertex = VertexRecord(
            id=next(self._vertex_ids),
            point=np.asarray(point, dtype=float),
            on_equator=host == EQUATOR_ID,
            host=host,
            creator=creator,
        )
        self.vertices[vertex.id] = vertex
        return vertex

    def _new_edge(self, carrier: int, start: int, end: int, cells=()) -> EdgeRecord:
        n = self.carriers[carrier].normal
        length = oriented_angle(n, self.point(start), self.point(end)) / TWO_PI
        edge = EdgeRecord(id=next(self._edge_ids), carrier=carrier, start=start, end=end, length=length, cells=list(cells))
        self.edges[edge.id] = edge
        return edge

    def _new_carrier(self, circle: GreatCircle, kind: CarrierKind, **extra) -> CarrierRecord:
        carrier = CarrierRecord(id=next(self._carrier_ids), circle=circle, kind=kind, birth_time=self.time, **extra)
        self.carriers[carrier.id] = carrier
        return carrier

    def _subdivide_equator(self, normal: np.ndarray, creator: int) -> tuple[int, int]:
        """Place the first two equator vertices where the circle ``normal`` crosses it."""
        w = np.cross(normal, np.asarray(NORTH_POLE))
        norm = np.linalg.norm(w)
        if norm < VERTEX_TOLERANCE:
            raise DegenerateEventError("Circle coincides with the equator")
        w /= norm
        v1 = self._new_vertex(w, EQUATOR_ID, creator)
        v2 = self._new_vertex(-w, EQUATOR_ID, creator)
        front = self._new_edge(EQUATOR_ID, v1.id, v2.id)
        back = self._new_edge(EQUATOR_ID, v2.id, v1.id)
        for cell in self.cells.values():
            if cell.hemisphere > 0:
                cell.vertices, cell.edges, cell.signs = [v1.id, v2.id], [front.id, back.id], [1, 1]
            else:
                cell.vertices, cell.edges, cell.signs = [v1.id, v2.id], [back.id, front.id], [-1, -1]
            front.cells.append(cell.id)
            back.cells.append(cell.id)
        return v1.id, v2.id

    def _insert_vertex(self, edge_id: int, point: np.ndarray, creator: int) -> int:
        """Split an edge at ``point`` and update every cell that contains it."""
        edge = self.edges.pop(edge_id)
        vertex = self._new_vertex(point, edge.carrier, creator)
        first = self._new_edge(edge.carrier, edge.start, vertex.id, edge.cells)
        second = self._new_edge(edge.carrier, vertex.id, edge.end, edge.cells)
        for cid in edge.cells:
            cell = self.cells[cid]
            k = cell.edges.index(edge_id)
            sign = cell.signs[k]
            pieces = [first.id, second.id] if sign > 0 else [second.id, first.id]
            cell.edges[k : k + 1] = pieces
            cell.signs[k : k + 1] = [sign, sign]
            cell.vertices.insert(k + 1, vertex.id)
        return vertex.id

    def _cut(self, cell_id: int, a: int, b: int, carrier_id: int) -> tuple[int, int]:
        """Replace a cell by the two pieces on either side of the chord ``a``-``b``."""
        cell = self.cells.pop(cell_id)
        n = len(cell.vertices)
        ia, ib = cell.vertices.index(a), cell.vertices.index(b)

        def run(i: int, j: int) -> tuple[list[int], list[int], list[int]]:
            steps = (j - i) % n
            idx = [(i + s) % n for s in range(steps)]
            verts = [cell.vertices[k] for k in idx] + [cell.vertices[j]]
            return verts, [cell.edges[k] for k in idx], [cell.signs[k] for k in idx]

        verts_a, edges_a, signs_a = run(ia, ib)
        verts_b, edges_b, signs_b = run(ib, ia)

        carrier = self.carriers[carrier_id]
        u = carrier.normal
        # Side of the chord on which the first piece lies, tested at the
        # midpoint of its first boundary edge.
        first_edge = self.edges[edges_a[0]]
        m = signs_a[0] * self.carriers[first_edge.carrier].normal
        start = self.point(verts_a[0])
        midpoint = rotate_about(m, start, 0.5 * oriented_angle(m, start, self.point(verts_a[1])))
        side_a = 1 if float(np.dot(u, midpoint)) > 0.0 else -1

        # First piece closes along the chord b -> a, the second along a -> b.
        if side_a > 0:
            chord = self._new_edge(carrier_id, b, a)
        else:
            chord = self._new_edge(carrier_id, a, b)

        daughter_a = self._new_cell(cell.hemisphere, verts_a, edges_a + [chord.id], signs_a + [side_a], cell_id)
        daughter_b = self._new_cell(cell.hemisphere, verts_b, edges_b + [chord.id], signs_b + [-side_a], cell_id)
        chord.cells = [daughter_a.id, daughter_b.id]
        for daughter, owned in ((daughter_a, edges_a), (daughter_b, edges_b)):
            for e in owned:
                cells = self.edges[e].cells
                cells[cells.index(cell_id)] = daughter.id
        return daughter_a.id, daughter_b.id

    def _crossing(self, cell: CellRecord, k: int, u: np.ndarray) -> np.ndarray:
        """Point where the circle ``u`` crosses boundary edge ``k`` of ``cell``."""
        edge = self.edges[cell.edges[k]]
        m = cell.signs[k] * self.carriers[edge.carrier].normal
        start = self.point(cell.vertices[k])
        end = self.point(cell.vertices[(k + 1) % len(cell.vertices)])
        x = np.cross(m, u)
        norm = np.linalg.norm(x)
        if norm < SIGN_TOLERANCE:
            raise DegenerateEventError("Splitting circle runs along a boundary edge")
        x /= norm
        span = oriented_angle(m, start, end)
        if not 0.0 < oriented_angle(m, start, x) < span:
            x = -x
        if min(angular_distance(x, start), angular_distance(x, end)) <= VERTEX_TOLERANCE:
            raise DegenerateEventError("Chord endpoint too close to an existing vertex")
        return x


def initial(side_to_side: bool = False) -> Tessellation:
    """The two closed hemispheres bounded by the equator."""
    tess = Tessellation(side_to_side=side_to_side)
    tess._new_cell(1, (), (), (), None)
    tess._new_cell(-1, (), (), (), None)
    return tess


def split(tess: Tessellation, cell_id: int, g: GreatCircle) -> Tessellation:
    """Split ``cell_id`` by ``g`` in place and return ``tess``.

    Raises:
        KeyError: If the cell is not alive.
        SplitMissError: If ``g`` does not meet the cell's interior.
        DegenerateEventError: For probability-zero coincidences; ``tess`` is unchanged.
    """
    cell = tess.cells[cell_id]
    u = g.array
    if cell.is_bare:
        if 1.0 - abs(u[2]) <= SIGN_TOLERANCE:
            raise DegenerateEventError("Splitting circle coincides with the equator")
        segment = tess._new_carrier(g, CarrierKind.SEGMENT, split_cell=cell_id, hemisphere=cell.hemisphere, length=0.5)
        x1, x2 = tess._subdivide_equator(u, segment.id)
    else:
        d = tess.vertex_points(cell_id) @ u
        if np.any(np.abs(d) <= SIGN_TOLERANCE):
            raise DegenerateEventError(f"Splitting circle passes through a vertex of cell {cell_id}")
        positive = d > 0.0
        if positive.all() or not positive.any():
            raise SplitMissError(f"Circle {g.normal} misses cell {cell_id}")
        n = len(cell.vertices)
        changes = [k for k in range(n) if positive[k] != positive[(k + 1) % n]]
        if len(changes) != 2:
            raise DegenerateEventError(f"Circle crosses cell {cell_id} boundary {len(changes)} times")
        points = [tess._crossing(cell, k, u) for k in changes]
        edge_ids = [cell.edges[k] for k in changes]
        segment = tess._new_carrier(g, CarrierKind.SEGMENT, split_cell=cell_id, hemisphere=cell.hemisphere)
        x1 = tess._insert_vertex(edge_ids[0], points[0], segment.id)
        x2 = tess._insert_vertex(edge_ids[1], points[1], segment.id)
        segment.length = angular_distance(points[0], points[1]) / TWO_PI
    segment.endpoints = (x1, x2)
    daughters = tess._cut(cell_id, x1, x2, segment.id)
    logger.debug("Split cell %s at t=%.6f into %s (segment %s)", cell_id, tess.time, daughters, segment.id)
    return tess


def insert_circle(tess: Tessellation, g: GreatCircle) -> Tessellation:
    """Add a full great circle, cutting every cell it meets (side-to-side model)."""
    u = g.array
    if tess.vertices:
        d = np.array([v.point for v in tess.vertices.values()]) @ u
        if np.any(np.abs(d) <= VERTEX_TOLERANCE):
            raise DegenerateEventError("Circle passes through an existing vertex")
    elif 1.0 - abs(u[2]) <= SIGN_TOLERANCE:
        raise DegenerateEventError("Circle coincides with the equator")

    if not tess.vertices:
        carrier = tess._new_carrier(g, CarrierKind.CIRCLE)
        on_circle = set(tess._subdivide_equator(u, carrier.id))
    else:
        crossings = []
        for edge in tess.edges.values():
            ds = float(np.dot(tess.point(edge.start), u))
            de = float(np.dot(tess.point(edge.end), u))
            if (ds > 0.0) == (de > 0.0):
                continue
            cell = tess.cells[edge.cells[0]]
            crossings.append((edge.id, tess._crossing(cell, cell.edges.index(edge.id), u)))
        carrier = tess._new_carrier(g, CarrierKind.CIRCLE)
        on_circle = {tess._insert_vertex(edge_id, point, carrier.id) for edge_id, point in crossings}

    for cell_id in list(tess.cells):
        cell = tess.cells[cell_id]
        hit = [v for v in cell.vertices if v in on_circle]
        if len(hit) == 2:
            tess._cut(cell_id, hit[0], hit[1], carrier.id)
        elif hit:
            raise GeometryError(f"Cell {cell_id} meets the new circle in {len(hit)} boundary points")
    return tess


def cell_sides(tess: Tessellation, cell_id: int) -> list[Side]:
    """Maximal runs of consecutive boundary edges sharing a carrier."""
    cell = tess.cells[cell_id]
    if cell.is_bare:
        return [Side(cell_id, EQUATOR_ID, frozenset({BARE_EQUATOR_EDGE}), 0, 1.0)]
    carriers = [tess.edges[e].carrier for e in cell.edges]
    n = len(carriers)
    starts = [k for k in range(n) if carriers[k] != carriers[k - 1]]
    if not starts:
        length = sum(tess.edges[e].length for e in cell.edges)
        return [Side(cell_id, carriers[0], frozenset(cell.edges), n, length)]
    sides = []
    for i, k in enumerate(starts):
        stop = starts[(i + 1) % len(starts)]
        run = [(k + s) % n for s in range((stop - k) % n or n)]
        edges = [cell.edges[j] for j in run]
        sides.append(
            Side(cell_id, carriers[k], frozenset(edges), len(edges) + 1, sum(tess.edges[e].length for e in edges))
        )
    return sides


def all_sides(tess: Tessellation) -> list[Side]:
    return [side for cid in tess.cells for side in cell_sides(tess, cid)]


def summarize(tess: Tessellation) -> RealizationSummary:
    """Exact counts, lengths and incidence totals of the current state."""
    segments = {c.id for c in tess.segments()}
    sides = all_sides(tess)

    by_carrier: dict[int, list[Side]] = {}
    for side in sides:
        by_carrier.setdefault(side.carrier, []).append(side)

    side_side = 0
    cell_side = 0
    for side in sides:
        same = by_carrier[side.carrier]
        side_side += sum(1 for other in same if other.edges <= side.edges or side.edges <= other.edges)
        cell_side += sum(1 for other in same if other.edges <= side.edges)

    cell_segment = sum(
        len({tess.edges[e].carrier for e in cell.edges} & segments) for cell in tess.cells.values()
    )
    degree: dict[int, int] = {}
    for edge in tess.edges.values():
        degree[edge.start] = degree.get(edge.start, 0) + 1
        degree[edge.end] = degree.get(edge.end, 0) + 1

    return RealizationSummary(
        t=tess.time,
        cells=len(tess.cells),
        edges=len(tess.edges),
        vertices=len(tess.vertices),
        sides=len(sides),
        segments=len(segments),
        edge_length=TWO_PI * sum(e.length for e in tess.edges.values()),
        segment_length=TWO_PI * sum(tess.carriers[s].length for s in segments),
        side_length=TWO_PI * sum(s.length for s in sides),
        equator_vertices=sum(1 for v in tess.vertices.values() if v.on_equator),
        equator_sides=sum(1 for s in sides if s.carrier == EQUATOR_ID),
        cell_vertex=sum(len(c.vertices) for c in tess.cells.values()),
        cell_edge=sum(len(c.edges) for c in tess.cells.values()),
        edge_cell=sum(len(e.cells) for e in tess.edges.values()),
        vertex_edge=sum(degree.values()),
        side_edge=sum(len(s.edges) for s in sides if s.n_vertices),
        side_vertex=sum(s.n_vertices for s in sides),
        edge_segment=sum(1 for e in tess.edges.values() if e.carrier in segments),
        vertex_segment=sum(
            (v.host in segments) + (v.creator in segments) for v in tess.vertices.values()
        ),
        side_segment=sum(1 for s in sides if s.carrier in segments),
        cell_segment=cell_segment,
        cell_side=cell_side,
        side_side=side_side,
        circles=len(tess.circles()),
    )


def validate(tess: Tessellation, rng: np.random.Generator | None = None, samples: int = 0) -> list[str]:
    """Return the list of violated invariants (empty when the state is consistent)."""
    problems: list[str] = []

    for edge in tess.edges.values():
        if len(edge.cells) != 2:
            problems.append(f"edge {edge.id} lies in {len(edge.cells)} cells")
        for cid in edge.cells:
            if cid not in tess.cells or edge.id not in tess.cells[cid].edges:
                problems.append(f"edge {edge.id} references cell {cid} which does not contain it")
        if edge.carrier not in tess.carriers:
            problems.append(f"edge {edge.id} has unknown carrier {edge.carrier}")

    area = 0.0
    for cell in tess.cells.values():
        n = len(cell.vertices)
        if len(cell.edges) != n or len(cell.signs) != n:
            problems.append(f"cell {cell.id} has mismatched boundary lists")
            continue
        for k, e in enumerate(cell.edges):
            edge = tess.edges.get(e)
            if edge is None:
                problems.append(f"cell {cell.id} references missing edge {e}")
                continue
            ends = (cell.vertices[k], cell.vertices[(k + 1) % n])
            expected = (edge.start, edge.end) if cell.signs[k] > 0 else (edge.end, edge.start)
            if ends != expected:
                problems.append(f"cell {cell.id} edge {e} does not join its boundary vertices")
            if cell.id not in edge.cells:
                problems.append(f"edge {e} does not list cell {cell.id}")
        if any(e not in tess.edges for e in cell.edges):
            continue
        normals = tess.inward_normals(cell.id)
        if n and np.any(tess.vertex_points(cell.id) @ normals.T < -1e-9):
            problems.append(f"cell {cell.id} is not convex")
        cell_area = polygon_area(tess.polygon(cell.id))
        if cell_area <= 0.0:
            problems.append(f"cell {cell.id} has non-positive area")
        area += cell_area
    if abs(area / (4.0 * math.pi) - 1.0) > 1e-9:
        problems.append(f"cell areas sum to {area / (4.0 * math.pi):.12f}, not 1")

    if problems:
        return problems

    s = summarize(tess)
    if s.vertices - s.edges + s.cells != 2:
        problems.append("Euler characteristic differs from 2")
    if tess.side_to_side:
        k = s.circles
        if k and (s.vertices, s.edges, s.cells) != (k * (k + 1), 2 * k * (k + 1), k * k + k + 2):
            problems.append(f"{k} circles give V={s.vertices}, E={s.edges}, Z={s.cells}")
        expected_degree = 4
    else:
        m = s.segments
        if s.segments != s.cells - 2:
            problems.append(f"|M|={s.segments} but |Z|-2={s.cells - 2}")
        if (s.vertices, s.edges) != (2 * m, 3 * m):
            problems.append(f"{m} segments give V={s.vertices}, E={s.edges}")
        expected_sides = 0
        for hemisphere in (1, -1):
            inside = sum(1 for c in tess.segments() if c.hemisphere == hemisphere)
            expected_sides += 4 * inside if inside else 1
        if s.sides != expected_sides:
            problems.append(f"{s.sides} sides, expected {expected_sides}")
        if abs(s.side_length - 2.0 * (s.segment_length + TWO_PI)) > 1e-9:
            problems.append("side length differs from 2(L_M + 2*pi)")
        expected_degree = 3

    degree: dict[int, int] = {v: 0 for v in tess.vertices}
    for edge in tess.edges.values():
        degree[edge.start] += 1
        degree[edge.end] += 1
    bad = [v for v, d in degree.items() if d != expected_degree]
    if bad:
        problems.append(f"vertices {bad[:5]} do not have degree {expected_degree}")
    if 2 * s.edges != expected_degree * s.vertices:
        problems.append("2|E| differs from the vertex degree sum")

    if rng is not None and samples > 0:
        for x in uniform_points(rng, samples):
            owners = tess.locate(x)
            if len(owners) != 1:
                problems.append(f"sample point lies in {len(owners)} cells")
                break
    return problems


__all__ = [
    "EQUATOR_ID",
    "BARE_EQUATOR_EDGE",
    "CarrierKind",
    "CarrierRecord",
    "VertexRecord",
    "EdgeRecord",
    "CellRecord",
    "Side",
    "RealizationSummary",
    "Tessellation",
    "initial",
    "split",
    "insert_circle",
    "cell_sides",
    "all_sides",
    "summarize",
    "validate",
]
