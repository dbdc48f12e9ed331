"""Exception hierarchy shared by the library and the CLI exit-code mapping."""

from __future__ import annotations


class QlstatError(Exception):
    """Base class for all package errors."""


class DomainError(QlstatError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NumericalError(QlstatError, ArithmeticError):
    """An iterative method failed to converge.

    ``residual`` holds the last achieved residual (or error bound) when known.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ExtremeQuantileError(QlstatError):
    """The requested order statistic index falls outside the sample.

    ``min_n`` is the smallest sample size at which the index becomes
    evaluable; ``tail`` names the offending CI tail (``"low"``/``"high"``)
    when the error comes from interval construction.
    """

    def __init__(self, message: str, min_n: int | None = None, tail: str | None = None,
                 local_n: int | None = None):
        super().__init__(message)
        self.min_n = min_n
        self.tail = tail
        self.local_n = local_n


class CalibrationOverflowError(QlstatError):
    """The calibrated level reached 1 (only happens for degenerate tiny n)."""


class DataError(QlstatError, ValueError):
    """Input data unusable for the requested computation."""


class DegenerateDataError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class CollinearDesignError(DataError):
    pass


class EmptyWindowError(DataError):
    pass


class DegenerateNuisanceError(DataError):
    pass


class ModeViolationError(QlstatError, ValueError):
    """A joint-inference mode was requested whose preconditions fail."""
