"""Closed-form first-order means of the splitting tessellation at time ``t``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from ..errors import EstimationError, ParameterError

FOUR_PI = 4.0 * math.pi


def _m(t: float) -> float:
    return t * t + 2.0 * t


def _side_denominator(t: float) -> float:
    return 2.0 * _m(t) + math.exp(-t)


# mu_XY: mean number of objects of class Y adjacent to the typical X.
ADJACENCY_FORMULAS: dict[str, Callable[[float], float]] = {
    "ZZ": lambda t: 1.0,
    "ZE": lambda t: 6.0 * _m(t) / (_m(t) + 2.0),
    "ZV": lambda t: 6.0 * _m(t) / (_m(t) + 2.0),
    "EZ": lambda t: 2.0,
    "EE": lambda t: 1.0,
    "EV": lambda t: 2.0,
    "ES": lambda t: 2.0,
    "EM": lambda t: (3.0 * t + 2.0) / (3.0 * (t + 2.0)),
    "VZ": lambda t: 3.0,
    "VE": lambda t: 3.0,
    "VV": lambda t: 1.0,
    "VS": lambda t: 5.0,
    "VM": lambda t: 2.0 * (t + 1.0) / (t + 2.0),
    "SE": lambda t: 3.0 * _m(t) / _side_denominator(t),
    "SV": lambda t: 5.0 * _m(t) / _side_denominator(t),
    "SM": lambda t: (2.0 * t * t + 2.0 * t) / _side_denominator(t),
    "ME": lambda t: (3.0 * t + 2.0) / (t + 2.0),
    "MV": lambda t: 4.0 * (t + 1.0) / (t + 2.0),
    "MS": lambda t: 4.0 * (t + 1.0) / (t + 2.0),
    "MM": lambda t: 1.0,
}

# Pairs with no known closed form; estimated only.
OPEN_ADJACENCIES: tuple[str, ...] = ("ZM", "MZ", "ZS", "SZ", "SS")

# Entries that equal their constant in every realization, not only in mean.
EXACT_ADJACENCIES: tuple[str, ...] = ("EZ", "VZ", "VS", "ES", "EV", "VE")


@dataclass(frozen=True)
class OracleValues:
    """Means of totals, intensities, typical sizes and adjacencies.

    Totals and intensities are defined for ``t >= 0``. Typical-object means
    and adjacencies are ratios of intensities and need ``t > 0``; reading them
    at ``t = 0`` raises :class:`EstimationError`.
    """

    t: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.t) or self.t < 0:
            raise ParameterError("t must be >= 0")

    # Totals of 2*pi*sigma_1 lengths.

    @property
    def total_edge_length(self) -> float:
        return 2.0 * math.pi * (1.0 + self.t - math.exp(-2.0 * self.t))

    @property
    def total_segment_length(self) -> float:
        return 2.0 * math.pi * self.t

    @property
    def total_side_length(self) -> float:
        return FOUR_PI * (self.t + 1.0)

    # Intensities (mean numbers of objects on the whole sphere).

    @property
    def cell_intensity(self) -> float:
        return _m(self.t) + 2.0

    @property
    def edge_intensity(self) -> float:
        return 3.0 * _m(self.t)

    @property
    def vertex_intensity(self) -> float:
        return 2.0 * _m(self.t)

    @property
    def side_intensity(self) -> float:
        return 4.0 * _m(self.t) + 2.0 * math.exp(-self.t)

    @property
    def segment_intensity(self) -> float:
        return _m(self.t)

    @property
    def equator_vertices(self) -> float:
        return 4.0 * self.t

    @property
    def equator_sides(self) -> float:
        return 4.0 * self.t + 2.0 * math.exp(-self.t)

    # Typical objects.

    def _require_positive(self) -> None:
        if self.t <= 0:
            raise EstimationError("typical-object means are undefined at t = 0")

    @property
    def mean_cell_area(self) -> float:
        self._require_positive()
        return FOUR_PI / self.cell_intensity

    @property
    def mean_cell_perimeter(self) -> float:
        self._require_positive()
        return self.total_side_length / self.cell_intensity

    @property
    def mean_edge_length(self) -> float:
        self._require_positive()
        return self.total_edge_length / self.edge_intensity

    @property
    def mean_side_length(self) -> float:
        self._require_positive()
        return self.total_side_length / self.side_intensity

    @property
    def mean_segment_length(self) -> float:
        self._require_positive()
        return 2.0 * math.pi / (self.t + 2.0)

    def adjacency(self, pair: str) -> float | None:
        """``mu_XY`` for a pair such as ``"ZV"``; ``None`` for the open pairs."""
        pair = pair.upper()
        if pair in OPEN_ADJACENCIES:
            return None
        if pair not in ADJACENCY_FORMULAS:
            raise ParameterError(f"Unknown adjacency pair {pair!r}")
        self._require_positive()
        return ADJACENCY_FORMULAS[pair](self.t)

    @property
    def segment_interior_vertices(self) -> float:
        """Vertices in the relative interior of the typical maximal segment."""
        return self.adjacency("MV") - 2.0

    @property
    def side_interior_vertices(self) -> float:
        return self.adjacency("SV") - 2.0

    def as_dict(self) -> dict[str, float]:
        """Every value defined at this ``t``, keyed by report name."""
        values = {
            "L_E": self.total_edge_length,
            "L_M": self.total_segment_length,
            "L_S": self.total_side_length,
            "lambda_Z": self.cell_intensity,
            "lambda_E": self.edge_intensity,
            "lambda_V": self.vertex_intensity,
            "lambda_S": self.side_intensity,
            "lambda_M": self.segment_intensity,
            "equator_vertices": self.equator_vertices,
            "equator_sides": self.equator_sides,
        }
        if self.t > 0:
            values.update(
                {
                    "a_Z": self.mean_cell_area,
                    "ell_boundary_Z": self.mean_cell_perimeter,
                    "ell_E": self.mean_edge_length,
                    "ell_S": self.mean_side_length,
                    "ell_M": self.mean_segment_length,
                }
            )
            values.update({f"mu_{pair}": f(self.t) for pair, f in ADJACENCY_FORMULAS.items()})
        return values


def closed_form(t: float) -> OracleValues:
    return OracleValues(t)


def planar_limits() -> dict[str, float]:
    """Limits of the adjacency means as ``t`` grows, where cells look planar."""
    return {
        "mu_ZV": 6.0,
        "mu_ZE": 6.0,
        "mu_MV": 4.0,
        "mu_SV": 2.5,
        "mu_EM": 1.0,
        "mu_SE": 1.5,
        "segment_interior_vertices": 2.0,
        "side_interior_vertices": 0.5,
    }
