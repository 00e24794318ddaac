import math

import numpy as np
import pandas as pd
import pytest

from stit_sphere.errors import EstimationError
from stit_sphere.process import ProcessConfig, replicate
from stit_sphere.stats.estimators import (
    QuantityEstimate,
    adjacency_estimates,
    correlation_estimate,
    estimate_means,
    full_report,
    mean_estimate,
    ratio_estimate,
    summaries_frame,
    typical_estimates,
)
from stit_sphere.stats.oracle import EXACT_ADJACENCIES, OPEN_ADJACENCIES


def test_quantity_without_oracle_is_unverified():
    q = QuantityEstimate.build("mu_SS", 3.2, 0.1)
    assert q.z_score is None
    assert not q.verified
    assert q.within(0.0)


def test_quantity_z_scores():
    assert QuantityEstimate.build("x", 1.2, 0.1, 1.0).z_score == pytest.approx(2.0)
    assert QuantityEstimate.build("x", 2.0, 0.0, 2.0).z_score == 0.0
    assert QuantityEstimate.build("x", 2.5, 0.0, 2.0).z_score == math.inf
    assert not QuantityEstimate.build("x", 1.5, 0.1, 1.0).within(3.0)


def test_mean_and_ratio_estimates():
    mean, se = mean_estimate(np.array([1.0, 2.0, 3.0, 4.0]))
    assert mean == 2.5
    assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    ratio, se = ratio_estimate(np.array([2.0, 4.0, 6.0]), np.array([1.0, 2.0, 3.0]))
    assert ratio == pytest.approx(2.0)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_estimator_input_checks():
    with pytest.raises(EstimationError, match="two replications"):
        mean_estimate(np.array([1.0]))
    with pytest.raises(EstimationError, match="zero denominator"):
        ratio_estimate(np.ones(3), np.zeros(3))
    with pytest.raises(EstimationError, match="constant"):
        correlation_estimate(np.ones(10), np.arange(10.0))


def test_correlation_of_independent_samples(rng):
    r, se = correlation_estimate(rng.poisson(2.0, 5000), rng.poisson(2.0, 5000))
    assert se == pytest.approx(1 / math.sqrt(5000))
    assert abs(r) < 4 * se


def test_summaries_frame_checks(small_batch):
    with pytest.raises(EstimationError, match="No realizations"):
        summaries_frame([])
    mixed = pd.concat([summaries_frame(small_batch[:5]), summaries_frame(small_batch[:5]).assign(t=2.0)])
    with pytest.raises(EstimationError, match="mix"):
        summaries_frame(mixed)


def test_means_agree_with_closed_forms(small_batch):
    report = estimate_means(small_batch, seed=777)
    assert report.replications == len(small_batch)
    assert report.quantities["lambda_Z"].oracle == pytest.approx(5.0)
    assert report.failures(4.5) == []


def test_typical_and_adjacency_estimates(small_batch):
    assert typical_estimates(small_batch).failures(4.5) == []
    report = adjacency_estimates(small_batch)
    assert report.failures(4.5) == []
    for pair in EXACT_ADJACENCIES:
        assert report.quantities[f"mu_{pair}"].z_score == 0.0
    for pair in OPEN_ADJACENCIES:
        assert not report.quantities[f"mu_{pair}"].verified


def test_full_report_frame(small_batch):
    report = full_report(small_batch, seed=777)
    frame = report.to_frame()
    assert list(frame.columns) == ["quantity", "estimate", "standard_error", "oracle", "z_score", "verified"]
    assert {"lambda_V", "a_Z", "ell_M", "mu_ZV", "mu_SS"} <= set(frame["quantity"])
    assert report.max_abs_z() < 4.5


def test_full_report_at_time_zero_has_only_means():
    summaries = list(replicate(ProcessConfig(t_max=0.0, seed=1), 5))
    report = full_report(summaries)
    assert "a_Z" not in report.quantities
    assert report.quantities["lambda_Z"].z_score == 0.0
    with pytest.raises(EstimationError):
        typical_estimates(summaries)
