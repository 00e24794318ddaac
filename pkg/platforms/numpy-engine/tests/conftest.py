"""Shared fixtures for the stit_sphere test suite."""

import numpy as np
import pytest

from stit_sphere.geometry import GreatCircle, UnitVec
from stit_sphere.process import ProcessConfig, replicate
from stit_sphere.tessellation import initial, split

MERIDIAN = GreatCircle(UnitVec(1.0, 0.0, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def one_split():
    """Upper hemisphere cut once by the meridian x = 0."""
    tess = initial()
    upper = next(cid for cid, cell in tess.cells.items() if cell.hemisphere > 0)
    return split(tess, upper, MERIDIAN)


@pytest.fixture(scope="session")
def small_batch():
    """400 summaries at t = 1, shared by the estimator tests."""
    return list(replicate(ProcessConfig(t_max=1.0, seed=777), 400))


@pytest.fixture(autouse=True)
def _quiet_env(monkeypatch):
    for name in (
        "STIT_LOG_LEVEL",
        "STIT_MAX_REJECTION_ITERS",
        "STIT_DEGENERACY_RETRIES",
        "STIT_JOBS",
        "STIT_DEFAULT_SEED",
        "OTEL_EXPORTER_OTLP_ENDPOINT",
    ):
        monkeypatch.delenv(name, raising=False)
