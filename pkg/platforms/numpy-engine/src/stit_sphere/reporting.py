"""
Run manifests and report writers.

A structured report is a JSON object with sorted keys::

    {"schema": "stit-sphere/report", "schema_version": 1,
     "manifest": {...}, "model": ..., "t": ..., "replications": ...,
     "quantities": {name: {estimate, standard_error, oracle, z_score, verified}},
     "extras": {...}}

A CSV report is the quantity table preceded by ``# key=value`` manifest
lines. Non-finite floats are written as the strings ``inf``, ``-inf`` and
``nan``. Only ``duration_seconds`` differs between identical runs.
"""

from __future__ import annotations

import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Literal, Mapping, Optional

import pandas as pd
from pydantic import BaseModel, Field

from . import __version__
from .stats.estimators import EstimateReport

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "stit-sphere/report"
REPORT_SCHEMA_VERSION = 1

OutputFormat = Literal["csv", "structured"]


class RunManifest(BaseModel):
    """Everything needed to reproduce one command's output."""

    command: str
    parameters: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    version: str = __version__
    duration_seconds: float = Field(0.0, ge=0.0, description="Wall-clock time; the only non-reproducible field")

    def without_timing(self) -> "RunManifest":
        return self.model_copy(update={"duration_seconds": 0.0})

    def header_lines(self) -> list[str]:
        lines = [
            f"# schema={REPORT_SCHEMA}",
            f"# schema_version={REPORT_SCHEMA_VERSION}",
            f"# command={self.command}",
            f"# version={self.version}",
            f"# seed={'' if self.seed is None else self.seed}",
        ]
        lines.extend(f"# parameters.{key}={_plain(value)}" for key, value in sorted(self.parameters.items()))
        lines.append(f"# duration_seconds={self.duration_seconds!r}")
        return lines


def _plain(value: Any) -> Any:
    """JSON-safe copy of ``value``; non-finite floats become strings."""
    if isinstance(value, float):
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "item") and callable(value.item):
        # numpy scalars
        return _plain(value.item())
    return value


def render_structured(
    manifest: RunManifest,
    report: Optional[EstimateReport] = None,
    extras: Optional[Mapping[str, Any]] = None,
) -> str:
    payload: dict[str, Any] = {
        "schema": REPORT_SCHEMA,
        "schema_version": REPORT_SCHEMA_VERSION,
        "manifest": manifest.model_dump(),
        "quantities": {},
        "extras": dict(extras or {}),
    }
    if report is not None:
        payload.update(
            model=report.model,
            t=report.t,
            replications=report.replications,
            quantities={name: q.model_dump() for name, q in report.quantities.items()},
        )
    return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"


def render_csv(manifest: RunManifest, frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    buffer.write("\n".join(manifest.header_lines()) + "\n")
    frame.to_csv(buffer, index=False, float_format="%.17g", lineterminator="\n")
    return buffer.getvalue()


def extras_frame(extras: Mapping[str, Any]) -> pd.DataFrame:
    """Flatten scalar extras into a two-column table for CSV output."""
    rows = [{"key": key, "value": _plain(value)} for key, value in sorted(extras.items())]
    return pd.DataFrame(rows, columns=["key", "value"])


def render(
    fmt: OutputFormat,
    manifest: RunManifest,
    report: Optional[EstimateReport] = None,
    extras: Optional[Mapping[str, Any]] = None,
) -> str:
    if fmt == "structured":
        return render_structured(manifest, report, extras)
    if fmt == "csv":
        frame = report.to_frame() if report is not None else extras_frame(extras or {})
        return render_csv(manifest, frame)
    raise ValueError(f"Unknown format {fmt!r}; expected 'csv' or 'structured'")


def write_output(text: str, out: Optional[Path]) -> None:
    """Write ``text`` to ``out``.

    Raises:
        OSError: If the path cannot be written.
    """
    if out is None:
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8", newline="\n")
    logger.info("Report written to %s", out)


def load_structured(path: Path) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    if data.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"{path} is not a {REPORT_SCHEMA} document")
    return data


__all__ = [
    "REPORT_SCHEMA",
    "REPORT_SCHEMA_VERSION",
    "RunManifest",
    "render",
    "render_structured",
    "render_csv",
    "write_output",
    "load_structured",
]
