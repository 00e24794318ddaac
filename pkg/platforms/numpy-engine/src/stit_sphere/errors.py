"""Exception hierarchy shared by the simulator, the oracle and the CLI."""

from __future__ import annotations


class StitError(Exception):
    """Base class for every error raised by ``stit_sphere``."""


class ParameterError(StitError, ValueError):
    """A caller-supplied parameter is outside its documented range."""


class GeometryError(StitError, ValueError):
    """Invalid geometric input (overlapping caps, points off their circle, ...)."""


class InvalidCellError(GeometryError):
    """A polygon has empty interior or is otherwise unusable as a cell."""


class SplitMissError(GeometryError):
    """The splitting circle does not meet the cell."""


class DegenerateEventError(StitError, RuntimeError):
    """A probability-zero coincidence was hit; the caller should resample."""


class DegeneracyBudgetExceeded(StitError, RuntimeError):
    """Resampling after degenerate events did not succeed within its budget."""


class RejectionLimitError(DegeneracyBudgetExceeded):
    """The rejection sampler for splitting circles hit its iteration cap."""

    def __init__(self, cell_id: int | None, tau: float, iterations: int):
        self.cell_id = cell_id
        self.tau = tau
        self.iterations = iterations
        label = "polygon" if cell_id is None else f"cell {cell_id}"
        super().__init__(
            f"No circle hitting {label} after {iterations} proposals "
            f"(tau([p])={tau:.3e}); t is too large for rejection sampling"
        )

    # Worker processes send errors back pickled.
    def __reduce__(self):
        return type(self), (self.cell_id, self.tau, self.iterations)


class EstimationError(StitError, ValueError):
    """A statistic cannot be formed from the supplied sample."""


class InvariantViolationError(StitError, AssertionError):
    """A realization broke one of the exact combinatorial identities."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))

    def __reduce__(self):
        return type(self), (self.problems,)


__all__ = [
    "StitError",
    "ParameterError",
    "GeometryError",
    "InvalidCellError",
    "SplitMissError",
    "DegenerateEventError",
    "DegeneracyBudgetExceeded",
    "RejectionLimitError",
    "EstimationError",
    "InvariantViolationError",
]
