import json
import math

import pytest

from stit_sphere import __version__
from stit_sphere.reporting import (
    REPORT_SCHEMA,
    RunManifest,
    load_structured,
    render,
    render_structured,
    write_output,
)
from stit_sphere.stats.estimators import EstimateReport, QuantityEstimate


@pytest.fixture
def report():
    return EstimateReport(
        t=1.0,
        replications=10,
        seed=4,
        quantities={
            "lambda_Z": QuantityEstimate.build("lambda_Z", 5.1, 0.1, 5.0),
            "mu_SS": QuantityEstimate.build("mu_SS", 2.0, 0.05),
        },
    )


def test_manifest_header_lines():
    manifest = RunManifest(command="simulate", parameters={"t": 1.0, "reps": 10}, seed=7)
    lines = manifest.header_lines()
    assert lines[0] == f"# schema={REPORT_SCHEMA}"
    assert f"# version={__version__}" in lines
    assert "# parameters.reps=10" in lines
    assert lines[-1] == "# duration_seconds=0.0"


def test_structured_output_is_sorted_json(report):
    manifest = RunManifest(command="simulate", seed=4, duration_seconds=1.5)
    data = json.loads(render_structured(manifest, report, {"note": math.inf}))
    assert data["schema"] == REPORT_SCHEMA
    assert data["replications"] == 10
    assert data["quantities"]["mu_SS"]["oracle"] is None
    assert data["quantities"]["lambda_Z"]["verified"] is True
    assert data["extras"]["note"] == "inf"


def test_identical_runs_differ_only_in_timing(report):
    first = RunManifest(command="simulate", seed=4, duration_seconds=1.5)
    second = first.model_copy(update={"duration_seconds": 2.5})
    assert render("structured", first.without_timing(), report) == render(
        "structured", second.without_timing(), report
    )


def test_csv_output(report):
    text = render("csv", RunManifest(command="simulate", seed=4), report)
    lines = text.splitlines()
    header = lines.index("quantity,estimate,standard_error,oracle,z_score,verified")
    assert all(line.startswith("# ") for line in lines[:header])
    assert lines[header + 1].startswith("lambda_Z,5.0999999999999996")


def test_csv_extras_table():
    text = render("csv", RunManifest(command="oracle"), extras={"b": 2.0, "a": 1.0})
    assert text.splitlines()[-3:] == ["key,value", "a,1", "b,2"]


def test_unknown_format():
    with pytest.raises(ValueError, match="Unknown format"):
        render("xml", RunManifest(command="oracle"))


def test_manifest_rejects_negative_seed():
    with pytest.raises(ValueError):
        RunManifest(command="simulate", seed=-1)


def test_write_and_load(tmp_path, report):
    target = tmp_path / "out" / "report.json"
    write_output(render("structured", RunManifest(command="simulate"), report), target)
    assert load_structured(target)["t"] == 1.0
    other = tmp_path / "other.json"
    other.write_text("{}", encoding="utf-8")
    with pytest.raises(ValueError, match="not a"):
        load_structured(other)
