"""
OpenTelemetry wiring for simulation batches.

Configures OTLP gRPC exporters for traces and metrics and instruments
``logging``. Until ``configure_telemetry`` runs, the global providers are the
OpenTelemetry no-op defaults, so spans and counters cost nothing.
"""

import logging
import os
from typing import Optional

from opentelemetry import metrics, trace
from opentelemetry.exporter.otlp.proto.grpc.metric_exporter import OTLPMetricExporter
from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
from opentelemetry.instrumentation.logging import LoggingInstrumentor
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
from opentelemetry.sdk.resources import SERVICE_NAME, Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor

from . import __version__

logger = logging.getLogger(__name__)

DEFAULT_SERVICE_NAME = "stit-sphere"


def configure_telemetry(
    endpoint: Optional[str] = None,
    service_name: str = DEFAULT_SERVICE_NAME,
    enable_logging: bool = True,
) -> None:
    """
    Install OTLP exporters for traces and metrics.

    Args:
        endpoint: OTLP gRPC endpoint (default: ``OTEL_EXPORTER_OTLP_ENDPOINT`` or localhost:4317)
        service_name: Value of the ``service.name`` resource attribute
        enable_logging: Whether to instrument Python logging with trace context
    """
    endpoint = endpoint or os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT", "http://localhost:4317")
    service_name = os.getenv("OTEL_SERVICE_NAME", service_name)

    logger.info("Configuring telemetry: endpoint=%s, service_name=%s", endpoint, service_name)

    resource = Resource.create({
        SERVICE_NAME: service_name,
        "service.version": __version__,
    })

    tracer_provider = TracerProvider(resource=resource)
    tracer_provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter(endpoint=endpoint, insecure=True)))
    trace.set_tracer_provider(tracer_provider)

    reader = PeriodicExportingMetricReader(
        exporter=OTLPMetricExporter(endpoint=endpoint, insecure=True),
        export_interval_millis=5000,
    )
    metrics.set_meter_provider(MeterProvider(resource=resource, metric_readers=[reader]))

    if enable_logging:
        LoggingInstrumentor().instrument(set_logging_format=True)

    logger.info("Telemetry configuration complete")


class SimulationTracer:
    """Spans for replication batches and self-test checks."""

    def __init__(self, service_name: str = DEFAULT_SERVICE_NAME):
        self.tracer = trace.get_tracer(service_name)

    def batch_span(self, operation_name: str, t: float, seed: int, replications: int, attributes: Optional[dict] = None):
        """
        Start a span describing one batch of replications.

        Returns:
            OpenTelemetry span context manager
        """
        attrs = dict(attributes or {})
        attrs.update({"stit.t": t, "stit.seed": str(seed), "stit.replications": replications})
        return self.tracer.start_as_current_span(operation_name, attributes=attrs)

    def check_span(self, check_name: str):
        return self.tracer.start_as_current_span("selftest.check", attributes={"stit.check": check_name})

    @staticmethod
    def record_outcome(span, passed: bool, max_abs_z: Optional[float] = None) -> None:
        span.set_attribute("stit.passed", passed)
        if max_abs_z is not None:
            span.set_attribute("stit.max_abs_z", max_abs_z)


class SimulationMetrics:
    """Counters and histograms for simulation work."""

    def __init__(self, service_name: str = DEFAULT_SERVICE_NAME):
        self.meter = metrics.get_meter(service_name)

        self.replications = self.meter.create_counter(
            name="stit.replications",
            description="Realizations simulated",
            unit="1",
        )
        self.splits = self.meter.create_counter(
            name="stit.splits",
            description="Cell splits applied",
            unit="1",
        )
        self.proposals = self.meter.create_counter(
            name="stit.proposals",
            description="Splitting-circle proposals drawn by the rejection sampler",
            unit="1",
        )
        self.degeneracies = self.meter.create_counter(
            name="stit.degeneracies",
            description="Degenerate events resampled",
            unit="1",
        )
        self.batch_duration = self.meter.create_histogram(
            name="stit.batch.duration",
            description="Wall-clock duration of a replication batch",
            unit="s",
        )

    def record_realization(self, splits: int, proposals: int, degeneracies: int, model: str = "splitting") -> None:
        attrs = {"model": model}
        self.replications.add(1, attributes=attrs)
        self.splits.add(splits, attributes=attrs)
        self.proposals.add(proposals, attributes=attrs)
        if degeneracies:
            self.degeneracies.add(degeneracies, attributes=attrs)

    def record_batch_duration(self, duration_seconds: float, attributes: Optional[dict] = None) -> None:
        self.batch_duration.record(duration_seconds, attributes=attributes or {})


_tracer: Optional[SimulationTracer] = None
_metrics: Optional[SimulationMetrics] = None


def get_tracer() -> SimulationTracer:
    global _tracer
    if _tracer is None:
        _tracer = SimulationTracer()
    return _tracer


def get_metrics() -> SimulationMetrics:
    global _metrics
    if _metrics is None:
        _metrics = SimulationMetrics()
    return _metrics
