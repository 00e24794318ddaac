from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter

from stit_sphere.observability import SimulationTracer, get_metrics, get_tracer


def _tracer_with_exporter():
    exporter = InMemorySpanExporter()
    provider = TracerProvider()
    provider.add_span_processor(SimpleSpanProcessor(exporter))
    tracer = SimulationTracer()
    tracer.tracer = provider.get_tracer("test")
    return tracer, exporter


def test_batch_span_attributes():
    tracer, exporter = _tracer_with_exporter()
    with tracer.batch_span("replicate", 1.5, 2**63, 100, {"stit.jobs": 2}):
        pass
    (span,) = exporter.get_finished_spans()
    assert span.name == "replicate"
    assert span.attributes["stit.t"] == 1.5
    assert span.attributes["stit.seed"] == str(2**63)
    assert span.attributes["stit.jobs"] == 2


def test_check_outcome_is_recorded():
    tracer, exporter = _tracer_with_exporter()
    with tracer.check_span("means") as span:
        tracer.record_outcome(span, False, 4.2)
    (finished,) = exporter.get_finished_spans()
    assert finished.attributes["stit.check"] == "means"
    assert finished.attributes["stit.passed"] is False
    assert finished.attributes["stit.max_abs_z"] == 4.2


def test_singletons_work_without_configuration():
    assert get_tracer() is get_tracer()
    metrics = get_metrics()
    metrics.record_realization(3, 10, 0)
    metrics.record_batch_duration(0.1, {"t": 1.0})
