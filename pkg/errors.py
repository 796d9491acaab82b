"""
Exception hierarchy shared by every stage of the toolkit.

The CLI catches GICSError and reports `error [stage]: message`.
"""

from __future__ import annotations

from typing import Any


class GICSError(Exception):
    """Base class for all domain errors."""


class ConfigurationError(GICSError):
    """Invalid grids, apertures, object layouts or run configuration."""


class AliasingError(GICSError):
    """Fresnel sampling criterion violated."""

    def __init__(self, message: str, source_grid: Any = None, target_grid: Any = None):
        super().__init__(message)
        self.source_grid = source_grid
        self.target_grid = target_grid


class ShapeError(GICSError):
    """Arrays, grids or frequency axes that do not line up."""


class ConsistencyError(GICSError):
    """A matrix that should be Hermitian is not."""


class DataError(GICSError):
    """Measured data outside its physical range (e.g. negative intensity)."""


class AlignmentError(GICSError):
    """Test-detector pixels that do not sit on the reference pixel pitch."""


class ModeError(GICSError):
    """Unknown sensing mode, or data missing for the requested mode."""


class SolverFailure(GICSError):
    """Proximal-gradient iteration diverged or produced non-finite iterates."""

    def __init__(self, message: str, objective_trace: list[float] | None = None):
        super().__init__(message)
        self.objective_trace = list(objective_trace or [])


class StatisticsError(GICSError):
    """Too few shots for an ensemble estimate."""


class FormatError(GICSError):
    """Malformed, truncated or foreign artifact file."""


class StageError(GICSError):
    """Failure inside a pipeline stage; carries the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
