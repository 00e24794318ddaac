"""
Spherical splitting tessellation simulator.

Simulates the splitting (STIT-type) tessellation of the sphere started from
the two hemispheres, the Poisson great-circle comparison model, and checks
Monte Carlo estimates against closed-form means.

Public API:
    - run / replicate: Simulate one realization or a batch of summaries
    - run_gc: Poisson great-circle tessellation
    - closed_form / gc_closed_form: Exact means at time t
    - full_report / gc_report: Estimates with standard errors and z-scores
    - configure_telemetry: OpenTelemetry setup
"""

__version__ = "0.1.0"

from .errors import StitError
from .great_circles import gc_closed_form, run_gc
from .observability import configure_telemetry, get_metrics, get_tracer
from .process import ProcessConfig, replicate, run
from .stats import closed_form, full_report, gc_report
from .tessellation import Tessellation, initial, split, summarize, validate

__all__ = [
    "__version__",
    "StitError",
    "ProcessConfig",
    "run",
    "replicate",
    "run_gc",
    "gc_closed_form",
    "closed_form",
    "full_report",
    "gc_report",
    "Tessellation",
    "initial",
    "split",
    "summarize",
    "validate",
    "configure_telemetry",
    "get_tracer",
    "get_metrics",
]
