import io

import pytest

from stit_sphere.export import (
    EVENT_COLUMNS,
    GEOMETRY_COLUMNS,
    event_lines,
    export_events,
    export_geometry,
    geometry_lines,
)
from stit_sphere.process import ProcessConfig, run
from stit_sphere.tessellation import initial


def test_geometry_header_and_records(one_split):
    lines = geometry_lines(one_split)
    assert lines[0].startswith("# schema=stit-sphere/geometry version=1 model=splitting")
    assert "edges=3" in lines[0]
    assert lines[1] == "# columns: " + " ".join(GEOMETRY_COLUMNS)
    records = [line.split() for line in lines[2:]]
    assert len(records) == 3
    assert all(len(r) == len(GEOMETRY_COLUMNS) for r in records)
    assert sorted(r[2] for r in records) == ["equator", "equator", "segment"]


def test_floats_round_trip(one_split):
    record = geometry_lines(one_split)[2].split()
    edge = one_split.edges[int(record[0])]
    start = one_split.point(edge.start)
    assert [float(v) for v in record[6:9]] == list(start)


def test_initial_state_has_no_edges():
    assert len(geometry_lines(initial())) == 2


def test_export_is_reproducible(tmp_path):
    config = ProcessConfig(t_max=2.0, seed=123, record_events=True)
    first, second = tmp_path / "a.txt", tmp_path / "b.txt"
    export_geometry(run(config), first)
    export_geometry(run(config), second)
    assert first.read_bytes() == second.read_bytes()


def test_event_log(tmp_path):
    tess = run(ProcessConfig(t_max=1.5, seed=8, record_events=True))
    lines = event_lines(tess.events)
    assert lines[1] == "# columns: " + " ".join(EVENT_COLUMNS)
    assert len(lines) == 2 + len(tess.events)
    target = tmp_path / "logs" / "events.txt"
    export_events(tess, target)
    assert target.read_text(encoding="utf-8").splitlines() == lines


def test_event_log_requires_recording():
    tess = run(ProcessConfig(t_max=1.0, seed=8))
    with pytest.raises(ValueError, match="record_events"):
        export_events(tess, io.StringIO())
