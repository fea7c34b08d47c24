"""
Exception hierarchy for the LwR toolkit.

The CLI maps each family to its own exit code (see cli/main.py).
"""
from typing import Any, Optional


class LwrError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LwrError, ValueError):
    """Invalid run configuration."""


class DataError(LwrError, ValueError):
    """Malformed, misaligned or out-of-range input data."""


class DimensionMismatchError(DataError):
    """Model parameters do not fit the dataset's feature dimensions."""


class CalibrationError(DataError):
    """Sigmoid calibration cannot be fitted to the given scores and labels."""


class ConvergenceError(LwrError, RuntimeError):
    """
    Training stopped at max_iterations without meeting its stopping rule.

    Attributes:
        best_iterate: Best point found (model object or raw parameter vector)
        objective: Objective value at best_iterate
    """

    def __init__(self, message: str, best_iterate: Optional[Any] = None, objective: float = float("nan")):
        super().__init__(message)
        self.best_iterate = best_iterate
        self.objective = objective
