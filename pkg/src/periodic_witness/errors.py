"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class WitnessError(Exception):
    """Base class for all package errors."""


class ParameterError(WitnessError, ValueError):
    """An argument is outside its allowed domain."""


class ConvergenceError(WitnessError, RuntimeError):
    """A numerical target could not be reached within the iteration budget.

    ``achieved`` carries whatever accuracy (or bracket) was reached so callers
    can decide whether the partial result is usable.
    """

    def __init__(self, message: str, achieved: object = None):
        super().__init__(message)
        self.achieved = achieved


class ParseError(WitnessError, ValueError):
    """A file could not be parsed. ``line`` and ``field`` locate the problem."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field


class UnitError(ParseError):
    """A configuration value was given in an unexpected unit."""


class ResolutionError(ParameterError):
    """A fine histogram is too coarse to resolve the mask slits."""


class UndefinedStatisticsError(ParameterError):
    """Error propagation is undefined (for example, zero total counts)."""
