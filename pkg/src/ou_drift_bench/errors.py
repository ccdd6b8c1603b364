"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "OuBenchError",
    "DegenerateDenominator",
    "MissingInnovations",
    "TooLarge",
    "TooSmall",
    "EmptySample",
    "NonFiniteValue",
    "InsufficientCells",
    "NonPositiveValue",
    "ExcessiveDegeneracy",
    "ConfigError",
]


class OuBenchError(Exception):
    """Base class for all errors raised by ou_drift_bench."""


class DegenerateDenominator(OuBenchError):
    """An estimator denominator fell below the degeneracy guard."""


class MissingInnovations(OuBenchError):
    """An operation needed the path's innovation increments but none were stored."""


class TooLarge(OuBenchError):
    """A dense oracle was asked for a grid size beyond its cost cap."""


class TooSmall(OuBenchError):
    """A sample statistic was requested on a sample below its minimum size."""


class EmptySample(OuBenchError):
    """A sample statistic was requested on an empty sample."""


class NonFiniteValue(OuBenchError):
    """An input contained NaN or infinity."""


class InsufficientCells(OuBenchError):
    """A rate fit needs at least three cells."""


class NonPositiveValue(OuBenchError):
    """A log-log fit received a value that is not strictly positive."""


class ExcessiveDegeneracy(OuBenchError):
    """Too many replications hit the degeneracy guard for the cell to be trusted."""


class ConfigError(OuBenchError):
    """A run configuration field failed validation."""
