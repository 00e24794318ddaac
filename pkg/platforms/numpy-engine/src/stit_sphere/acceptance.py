"""
Self-test suite: Monte Carlo estimates against closed forms and exact
per-realization identities.

The default suite ships with the package as ``config/acceptance.yaml``. Checks that share
``(t, replications)`` reuse one simulated batch, whose seed is derived from
the suite seed and ``t`` only, so a check's result does not depend on which
other checks run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
import yaml

from .errors import EstimationError, ParameterError
from .geometry import GreatCircle, SphericalCap, SphericalPolygon, UnitVec, crofton_mc, intrinsic_volumes
from .great_circles import simulate_gc
from .observability import get_tracer
from .process import ProcessConfig, daughter_segment_counts, derive_seed, first_jump, make_rng, map_replications
from .stats.capacity import CapacitySpec, capacity_exact, capacity_mc, capacity_recursion_two_caps
from .stats.estimators import (
    EstimateReport,
    adjacency_estimates,
    correlation_estimate,
    estimate_means,
    gc_report,
    summaries_frame,
    typical_estimates,
)
from .stats.intersection import crossing_counts, poisson_gof
from .tessellation import Tessellation, summarize, validate

logger = logging.getLogger(__name__)

DEFAULT_SUITE = resources.files(__package__) / "config" / "acceptance.yaml"

CHECK_KINDS = (
    "invariants",
    "first_jump",
    "means",
    "typical",
    "adjacency",
    "equator",
    "single_cap",
    "two_caps",
    "intersection",
    "great_circle",
    "model_agreement",
    "crofton",
    "daughters",
)

EQUATOR_COLUMNS = {"equator_vertices": "equator_vertices", "equator_sides": "equator_sides"}

# Per-realization identities: summary column == factor * object count.
EXACT_ADJACENCY_IDENTITIES: dict[str, tuple[str, str, int]] = {
    "mu_EZ": ("edge_cell", "edges", 2),
    "mu_VZ": ("cell_vertex", "vertices", 3),
    "mu_VS": ("side_vertex", "vertices", 5),
    "mu_ES": ("side_edge", "edges", 2),
    "mu_EV": ("vertex_edge", "edges", 2),
    "mu_VE": ("vertex_edge", "vertices", 3),
}


@dataclass
class CheckDefinition:
    name: str
    kind: str
    times: List[float] = field(default_factory=lambda: [1.0])
    replications: int = 10_000
    tolerance: float = 3.0
    caps: List[Dict[str, float]] = field(default_factory=list)
    min_p_value: float = 0.01
    normal: Optional[List[float]] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CheckDefinition":
        name = data.get("name")
        kind = data.get("kind")
        if not name or not kind:
            raise ValueError(f"Check config missing name or kind: {data}")
        if kind not in CHECK_KINDS:
            raise ValueError(f"Check {name!r} has unknown kind {kind!r}")
        times = [float(t) for t in data.get("times", [1.0])]
        if any(t < 0 for t in times):
            raise ValueError(f"Check {name!r}: t must be >= 0")
        replications = int(data.get("replications", 10_000))
        if replications < 2:
            raise ValueError(f"Check {name!r}: replications must be >= 2")
        return cls(
            name=name,
            kind=kind,
            times=times,
            replications=replications,
            tolerance=float(data.get("tolerance", 3.0)),
            caps=list(data.get("caps", [])),
            min_p_value=float(data.get("min_p_value", 0.01)),
            normal=data.get("normal"),
        )

    def circle(self) -> GreatCircle:
        return GreatCircle(UnitVec.of(self.normal or [1.0, 0.0, 0.0]))

    def capacity_spec(self) -> CapacitySpec:
        return CapacitySpec(
            caps=[SphericalCap.at(c["colatitude"], c["longitude"], c["theta"]) for c in self.caps]
        )


@dataclass
class SuiteDefinition:
    seed: int
    checks: List[CheckDefinition]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SuiteDefinition":
        suite = data.get("suite")
        if not suite or not suite.get("checks"):
            raise ValueError("Invalid suite config: missing 'suite.checks' section")
        return cls(
            seed=int(suite.get("seed", 0)),
            checks=[CheckDefinition.from_dict(entry) for entry in suite["checks"]],
        )


def load_suite(path: Optional[Path] = None) -> SuiteDefinition:
    """Read a suite definition from YAML.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the file does not describe a valid suite.
    """
    source = DEFAULT_SUITE if path is None else Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"Suite config not found: {source}")
    data = yaml.safe_load(source.read_text(encoding="utf-8")) or {}
    return SuiteDefinition.from_dict(data)


class CheckResult(BaseModel):
    name: str
    kind: str
    passed: bool
    max_abs_z: float = 0.0
    details: dict[str, Any] = Field(default_factory=dict)


class SuiteResult(BaseModel):
    seed: int
    passed: bool
    checks: list[CheckResult]

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]


def _z(estimate: float, target: float, se: float) -> float:
    diff = estimate - target
    if abs(diff) <= 1e-12 * max(1.0, abs(target)):
        return 0.0
    return diff / se if se > 0 else math.copysign(math.inf, diff)


def _report_details(reports: Dict[str, EstimateReport], k: float) -> tuple[bool, float, dict]:
    details = {}
    passed = True
    worst = 0.0
    for label, report in reports.items():
        failures = report.failures(k)
        passed &= not failures
        worst = max(worst, report.max_abs_z())
        details[label] = {
            "failures": failures,
            "quantities": {name: q.model_dump() for name, q in report.quantities.items()},
        }
    return passed, worst, details


def _invariant_problems(tess: Tessellation) -> list[str]:
    return validate(tess)


class SuiteRunner:
    """Runs checks, caching simulated batches by ``(model, t, replications)``."""

    def __init__(self, seed: int, jobs: int = 1, scale: float = 1.0):
        if scale <= 0:
            raise ParameterError("scale must be positive")
        self.seed = seed
        self.jobs = jobs
        self.scale = scale
        self._frames: dict[tuple[str, float, int], pd.DataFrame] = {}

    def reps(self, check: CheckDefinition) -> int:
        return max(100, int(round(check.replications * self.scale)))

    def batch_seed(self, t: float, salt: int = 0) -> int:
        return derive_seed(self.seed, int(round(t * 1_000_000)) + salt)

    def summaries(self, t: float, reps: int, model: str = "splitting") -> pd.DataFrame:
        key = (model, t, reps)
        if key not in self._frames:
            salt = 0 if model == "splitting" else 1 << 40
            config = ProcessConfig(t_max=t, seed=self.batch_seed(t, salt))
            simulate = simulate_gc if model == "great_circle" else None
            extra = {} if simulate is None else {"simulate": simulate}
            self._frames[key] = summaries_frame(map_replications(summarize, config, reps, self.jobs, **extra))
        return self._frames[key]

    # Checks -------------------------------------------------------------------

    def check_invariants(self, check: CheckDefinition) -> CheckResult:
        reps = self.reps(check)
        details = {}
        passed = True
        for t in check.times:
            config = ProcessConfig(t_max=t, seed=self.batch_seed(t, 2))
            bad = [problems for problems in map_replications(_invariant_problems, config, reps, self.jobs) if problems]
            frame = self.summaries(t, reps)
            exact = {
                name: int(np.count_nonzero(frame[num].to_numpy() != factor * frame[den].to_numpy()))
                for name, (num, den, factor) in EXACT_ADJACENCY_IDENTITIES.items()
            }
            passed &= not bad and not any(exact.values())
            details[f"t={t}"] = {
                "violating_realizations": len(bad),
                "first_violation": bad[0] if bad else [],
                "exact_adjacency_violations": exact,
            }
        return CheckResult(name=check.name, kind=check.kind, passed=passed, details=details)

    def check_first_jump(self, check: CheckDefinition) -> CheckResult:
        reps = self.reps(check)
        base = ProcessConfig(t_max=0.0, seed=self.batch_seed(0.0, 3))
        waits = np.empty(reps)
        upper = np.empty(reps)
        for i in range(reps):
            dt, hemisphere = first_jump(base.model_copy(update={"seed": derive_seed(base.seed, i)}))
            waits[i], upper[i] = dt, hemisphere > 0
        mean_wait, se_wait = float(waits.mean()), float(waits.std(ddof=1)) / math.sqrt(reps)
        freq = float(upper.mean())
        se_freq = math.sqrt(0.25 / reps)
        zs = {"mean_wait": _z(mean_wait, 0.5, se_wait), "upper_frequency": _z(freq, 0.5, se_freq)}
        worst = max(abs(z) for z in zs.values())
        return CheckResult(
            name=check.name,
            kind=check.kind,
            passed=worst <= check.tolerance,
            max_abs_z=worst,
            details={"mean_wait": float(mean_wait), "upper_frequency": float(freq), "z_scores": zs},
        )

    def _estimate_check(self, check: CheckDefinition, build: Callable[[pd.DataFrame], EstimateReport]) -> CheckResult:
        reps = self.reps(check)
        reports = {f"t={t}": build(self.summaries(t, reps)) for t in check.times}
        passed, worst, details = _report_details(reports, check.tolerance)
        return CheckResult(name=check.name, kind=check.kind, passed=passed, max_abs_z=worst, details=details)

    def check_means(self, check: CheckDefinition) -> CheckResult:
        return self._estimate_check(check, lambda frame: estimate_means(frame, self.seed))

    def check_typical(self, check: CheckDefinition) -> CheckResult:
        return self._estimate_check(check, lambda frame: typical_estimates(frame, self.seed))

    def check_adjacency(self, check: CheckDefinition) -> CheckResult:
        return self._estimate_check(check, lambda frame: adjacency_estimates(frame, self.seed))

    def check_equator(self, check: CheckDefinition) -> CheckResult:
        return self._estimate_check(check, lambda frame: estimate_means(frame, self.seed, columns=EQUATOR_COLUMNS))

    def check_great_circle(self, check: CheckDefinition) -> CheckResult:
        reps = self.reps(check)
        reports = {f"t={t}": gc_report(self.summaries(t, reps, "great_circle"), self.seed) for t in check.times}
        passed, worst, details = _report_details(reports, check.tolerance)
        return CheckResult(name=check.name, kind=check.kind, passed=passed, max_abs_z=worst, details=details)

    def check_model_agreement(self, check: CheckDefinition) -> CheckResult:
        reps = self.reps(check)
        details = {}
        worst = 0.0
        for t in check.times:
            splitting = typical_estimates(self.summaries(t, reps), self.seed)
            gc = gc_report(self.summaries(t, reps, "great_circle"), self.seed)
            for name in ("a_Z", "ell_boundary_Z"):
                a, b = splitting.quantities[name], gc.quantities[name]
                z = _z(a.estimate, b.estimate, math.hypot(a.standard_error, b.standard_error))
                worst = max(worst, abs(z))
                details[f"t={t}:{name}"] = {"splitting": a.estimate, "great_circle": b.estimate, "z_score": z}
        return CheckResult(
            name=check.name, kind=check.kind, passed=worst <= check.tolerance, max_abs_z=worst, details=details
        )

    def check_single_cap(self, check: CheckDefinition) -> CheckResult:
        spec = check.capacity_spec()
        reps = self.reps(check)
        details = {}
        worst = 0.0
        for t in check.times:
            p, se = capacity_mc(spec, t, reps, self.batch_seed(t, 4), self.jobs)
            exact = capacity_exact(spec, t)
            z = _z(p, exact, se)
            worst = max(worst, abs(z))
            details[f"t={t}"] = {"estimate": p, "standard_error": se, "exact": exact, "z_score": z}
        return CheckResult(
            name=check.name, kind=check.kind, passed=worst <= check.tolerance, max_abs_z=worst, details=details
        )

    def check_two_caps(self, check: CheckDefinition) -> CheckResult:
        spec = check.capacity_spec()
        reps = self.reps(check)
        details = {}
        worst = 0.0
        for t in check.times:
            p, se = capacity_mc(spec, t, reps, self.batch_seed(t, 5), self.jobs)
            recursion = capacity_recursion_two_caps(spec, t)
            z = _z(p, recursion, se)
            worst = max(worst, abs(z))
            details[f"t={t}"] = {"estimate": p, "standard_error": se, "recursion": recursion, "z_score": z}
        return CheckResult(
            name=check.name, kind=check.kind, passed=worst <= check.tolerance, max_abs_z=worst, details=details
        )

    def check_intersection(self, check: CheckDefinition) -> CheckResult:
        circle = check.circle()
        reps = self.reps(check)
        details = {}
        passed = True
        worst = 0.0
        for t in check.times:
            counts = crossing_counts(t, circle, reps, self.batch_seed(t, 6), self.jobs)
            upper, lower, equator = counts[:, 0], counts[:, 1], counts[:, 2]
            fits = {side: poisson_gof(sample, t) for side, sample in (("upper", upper), ("lower", lower))}
            try:
                r, se = correlation_estimate(upper, lower)
                z = _z(r, 0.0, se)
            except EstimationError:
                r, z = math.nan, math.inf
            pair_rate = float(np.mean(equator == 2))
            passed &= all(f.p_value > check.min_p_value for f in fits.values()) and abs(z) <= check.tolerance
            passed &= pair_rate == 1.0
            worst = max(worst, abs(z))
            details[f"t={t}"] = {
                "upper_mean": float(upper.mean()),
                "lower_mean": float(lower.mean()),
                "upper_p_value": fits["upper"].p_value,
                "lower_p_value": fits["lower"].p_value,
                "correlation": r,
                "correlation_z": z,
                "equator_pair_rate": pair_rate,
            }
        return CheckResult(name=check.name, kind=check.kind, passed=passed, max_abs_z=worst, details=details)

    def check_crofton(self, check: CheckDefinition) -> CheckResult:
        n = self.reps(check)
        rng = make_rng(self.batch_seed(0.0, 7))
        shapes = {
            "hemisphere": SphericalPolygon.hemisphere([0.0, 0.0, 1.0]),
            "quarter_lune": SphericalPolygon.lune([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        }
        details = {}
        worst = 0.0
        for label, polygon in shapes.items():
            volumes = intrinsic_volumes(polygon)
            for order, target in ((1, volumes.v2), (0, volumes.v1)):
                estimate, se = crofton_mc(polygon, n, rng, order=order)
                z = _z(estimate, target, se)
                worst = max(worst, abs(z))
                details[f"{label}:order{order}"] = {"estimate": estimate, "exact": target, "z_score": z}
        return CheckResult(
            name=check.name, kind=check.kind, passed=worst <= check.tolerance, max_abs_z=worst, details=details
        )

    def check_daughters(self, check: CheckDefinition) -> CheckResult:
        reps = self.reps(check)
        circle = check.circle()
        details = {}
        worst = 0.0
        for t in check.times:
            base = ProcessConfig(t_max=t, seed=self.batch_seed(t, 8))
            pairs = [
                daughter_segment_counts(base.model_copy(update={"seed": derive_seed(base.seed, i)}), circle)
                for i in range(reps)
            ]
            counts = np.array(pairs, dtype=float)
            r, se = correlation_estimate(counts[:, 0], counts[:, 1])
            z = _z(r, 0.0, se)
            worst = max(worst, abs(z))
            details[f"t={t}"] = {"correlation": r, "standard_error": se, "z_score": z}
        return CheckResult(
            name=check.name, kind=check.kind, passed=worst <= check.tolerance, max_abs_z=worst, details=details
        )

    def run(self, check: CheckDefinition) -> CheckResult:
        handler = getattr(self, f"check_{check.kind}")
        tracer = get_tracer()
        with tracer.check_span(check.name) as span:
            result = handler(check)
            tracer.record_outcome(span, result.passed, result.max_abs_z)
        logger.info("Check %s: %s (max |z| = %.3f)", check.name, "ok" if result.passed else "FAILED", result.max_abs_z)
        return result


def run_suite(
    suite: SuiteDefinition,
    seed: Optional[int] = None,
    jobs: int = 1,
    scale: float = 1.0,
    only: Optional[List[str]] = None,
) -> SuiteResult:
    """Run every check (or those named in ``only``) and collect the results."""
    seed = suite.seed if seed is None else seed
    runner = SuiteRunner(seed, jobs, scale)
    checks = [c for c in suite.checks if only is None or c.name in only]
    if only is not None:
        unknown = sorted(set(only) - {c.name for c in suite.checks})
        if unknown:
            raise ParameterError(f"Unknown checks: {', '.join(unknown)}")
    results = [runner.run(check) for check in checks]
    return SuiteResult(seed=seed, passed=all(r.passed for r in results), checks=results)


__all__ = [
    "DEFAULT_SUITE",
    "CHECK_KINDS",
    "CheckDefinition",
    "SuiteDefinition",
    "CheckResult",
    "SuiteResult",
    "SuiteRunner",
    "load_suite",
    "run_suite",
]
