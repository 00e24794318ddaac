"""
Plain-text geometry export and event log.

Both formats open with ``#`` header lines naming the schema, its version and
the column order, followed by one whitespace-separated record per line.
Floats use ``%.17g``, which round-trips doubles and ignores the locale.

Geometry records (one per edge)::

    edge carrier kind nx ny nz sx sy sz ex ey ez cell_a cell_b

Event records (one per jump)::

    index time cell nx ny nz daughter_a daughter_b segment vertex_a vertex_b
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, TextIO

from .process import SplitEvent
from .tessellation import Tessellation

logger = logging.getLogger(__name__)

GEOMETRY_SCHEMA = "stit-sphere/geometry"
EVENTS_SCHEMA = "stit-sphere/events"
FORMAT_VERSION = 1

GEOMETRY_COLUMNS = ("edge", "carrier", "kind", "nx", "ny", "nz", "sx", "sy", "sz", "ex", "ey", "ez", "cell_a", "cell_b")
EVENT_COLUMNS = (
    "index", "time", "cell", "nx", "ny", "nz", "daughter_a", "daughter_b", "segment", "vertex_a", "vertex_b"
)


def fmt(value: float) -> str:
    return "%.17g" % value


def _header(schema: str, columns: Iterable[str], **meta) -> list[str]:
    fields = " ".join(f"{key}={value}" for key, value in meta.items())
    first = f"# schema={schema} version={FORMAT_VERSION}" + (f" {fields}" if fields else "")
    return [first, "# columns: " + " ".join(columns)]


def geometry_lines(tess: Tessellation, model: str = "splitting") -> list[str]:
    """Header plus one record per edge, ordered by edge id."""
    lines = _header(
        GEOMETRY_SCHEMA,
        GEOMETRY_COLUMNS,
        model=model,
        t=fmt(tess.time),
        cells=len(tess.cells),
        edges=len(tess.edges),
        vertices=len(tess.vertices),
    )
    for edge_id in sorted(tess.edges):
        edge = tess.edges[edge_id]
        carrier = tess.carriers[edge.carrier]
        cells = sorted(edge.cells)
        values = [
            str(edge.id),
            str(carrier.id),
            carrier.kind.value,
            *(fmt(c) for c in carrier.normal),
            *(fmt(c) for c in tess.point(edge.start)),
            *(fmt(c) for c in tess.point(edge.end)),
            *(str(c) for c in cells),
        ]
        lines.append(" ".join(values))
    return lines


def event_lines(events: Iterable[SplitEvent]) -> list[str]:
    lines = _header(EVENTS_SCHEMA, EVENT_COLUMNS)
    for event in events:
        values = [
            str(event.index),
            fmt(event.time),
            str(event.cell),
            *(fmt(c) for c in event.normal),
            *(str(d) for d in event.daughters),
            str(event.segment),
            *(str(v) for v in event.vertices),
        ]
        lines.append(" ".join(values))
    return lines


def write_lines(lines: list[str], target: Path | TextIO) -> None:
    text = "\n".join(lines) + "\n"
    if isinstance(target, Path):
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8", newline="\n")
        logger.info("Wrote %d records to %s", len(lines) - 2, target)
    else:
        target.write(text)


def export_geometry(tess: Tessellation, target: Path | TextIO, model: str = "splitting") -> None:
    write_lines(geometry_lines(tess, model), target)


def export_events(tess: Tessellation, target: Path | TextIO) -> None:
    """Write the event log recorded during the run.

    Raises:
        ValueError: If the run did not record events.
    """
    if tess.events is None:
        raise ValueError("No event log: run with record_events enabled")
    write_lines(event_lines(tess.events), target)


__all__ = [
    "GEOMETRY_SCHEMA",
    "EVENTS_SCHEMA",
    "FORMAT_VERSION",
    "geometry_lines",
    "event_lines",
    "export_geometry",
    "export_events",
]
