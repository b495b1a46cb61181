"""Exceptions raised across the toolkit.

The CLI maps these to exit codes and the HTTP API to status codes, so every
failure mode a caller can act on has its own class.
"""

from typing import Any


class WRatioError(Exception):
    """Base class for all toolkit errors"""


class DomainError(WRatioError, ValueError):
    """An argument lies outside the domain where the quantity is defined"""


class DatasetError(WRatioError, ValueError):
    """Input data does not satisfy the Dataset schema"""


class EmptyGrid(WRatioError, ValueError):
    """No prevalence value is admissible for the requested risk ratio"""


class RankDeficient(WRatioError):
    """The design matrix does not have full column rank"""

    def __init__(self, message: str, columns: list[str] | None = None):
        super().__init__(message)
        self.columns = columns or []


class NotConverged(WRatioError):
    """IRLS stopped without meeting the convergence criterion.

    The partial fit (``converged=False``) is attached so callers can still
    report it.
    """

    def __init__(self, message: str, fit: Any = None):
        super().__init__(message)
        self.fit = fit


class AllReplicationsFailed(WRatioError):
    """Every Monte Carlo replication failed for at least one lambda"""


class SeparationWarning(UserWarning):
    """A coefficient diverged, which usually means (quasi-)complete separation"""
