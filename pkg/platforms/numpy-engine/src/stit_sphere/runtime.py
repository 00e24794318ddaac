"""Runtime settings: environment loading, logging and telemetry bootstrap."""

from dataclasses import dataclass
import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from .process import DEFAULT_DEGENERACY_RETRIES, DEFAULT_MAX_REJECTION_ITERS

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DEFAULT_SEED = 20240917


@dataclass
class SimulationSettings:
    max_rejection_iters: int = DEFAULT_MAX_REJECTION_ITERS
    degeneracy_retries: int = DEFAULT_DEGENERACY_RETRIES
    jobs: int = 1
    default_seed: int = DEFAULT_SEED


@dataclass
class ObservabilitySettings:
    enabled: bool
    endpoint: Optional[str]
    service_name: str


@dataclass
class RuntimeSettings:
    simulation: SimulationSettings
    observability: ObservabilitySettings
    log_level: str = "INFO"


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from exc


def load_settings(env_path: Optional[Path] = None) -> RuntimeSettings:
    """
    Read settings from the environment, after loading an optional ``.env``.

    Recognised variables:
    - STIT_LOG_LEVEL
    - STIT_MAX_REJECTION_ITERS, STIT_DEGENERACY_RETRIES
    - STIT_JOBS, STIT_DEFAULT_SEED
    - OTEL_EXPORTER_OTLP_ENDPOINT, OTEL_SERVICE_NAME

    Raises:
        ValueError: If a numeric variable does not parse or is out of range.
    """
    env_path = env_path or Path.cwd() / ".env"
    if env_path.exists():
        load_dotenv(env_path)
        logger.debug("Loaded environment from: %s", env_path)

    simulation = SimulationSettings(
        max_rejection_iters=_int_env("STIT_MAX_REJECTION_ITERS", DEFAULT_MAX_REJECTION_ITERS),
        degeneracy_retries=_int_env("STIT_DEGENERACY_RETRIES", DEFAULT_DEGENERACY_RETRIES),
        jobs=_int_env("STIT_JOBS", 1),
        default_seed=_int_env("STIT_DEFAULT_SEED", DEFAULT_SEED),
    )
    if simulation.max_rejection_iters < 1 or simulation.degeneracy_retries < 1 or simulation.jobs < 1:
        raise ValueError("STIT_MAX_REJECTION_ITERS, STIT_DEGENERACY_RETRIES and STIT_JOBS must be >= 1")
    if not 0 <= simulation.default_seed < 2**64:
        raise ValueError("STIT_DEFAULT_SEED must be a 64-bit unsigned integer")

    endpoint = os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT") or None
    return RuntimeSettings(
        simulation=simulation,
        observability=ObservabilitySettings(
            enabled=endpoint is not None,
            endpoint=endpoint,
            service_name=os.getenv("OTEL_SERVICE_NAME", "stit-sphere"),
        ),
        log_level=os.getenv("STIT_LOG_LEVEL", "INFO").upper(),
    )


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)


def initialize_observability(settings: ObservabilitySettings) -> bool:
    """Install telemetry exporters when an endpoint is configured."""
    if not settings.enabled:
        logger.debug("Observability disabled (no OTEL_EXPORTER_OTLP_ENDPOINT)")
        return False
    try:
        from .observability import configure_telemetry

        configure_telemetry(endpoint=settings.endpoint, service_name=settings.service_name)
    except Exception as exc:
        logger.error("Failed to initialize observability: %s", exc)
        return False
    logger.info("Observability initialized: endpoint=%s, service=%s", settings.endpoint, settings.service_name)
    return True


def bootstrap(env_path: Optional[Path] = None, verbose: bool = False) -> RuntimeSettings:
    """Load settings, configure logging and telemetry; returns the settings."""
    settings = load_settings(env_path)
    configure_logging("DEBUG" if verbose else settings.log_level)
    initialize_observability(settings.observability)
    return settings


__all__ = [
    "SimulationSettings",
    "ObservabilitySettings",
    "RuntimeSettings",
    "load_settings",
    "configure_logging",
    "initialize_observability",
    "bootstrap",
]
