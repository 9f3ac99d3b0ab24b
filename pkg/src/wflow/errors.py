"""Exception types shared across the solver stack."""

from __future__ import annotations


class WflowError(Exception):
    """Base class for all package errors."""


class ParameterError(WflowError):
    """A scalar argument is outside its admissible range."""


class InvalidSpecError(WflowError):
    """A cost/energy/potential description violates its standing assumptions."""


class InvalidDensityError(WflowError):
    """Raw density data cannot represent a probability density."""


class NonInvertibleCdfError(WflowError):
    """The density has interior zero cells, so its CDF cannot be inverted."""


class DegenerateCellError(WflowError):
    """A quantile representation has repeated nodes (zero-width mass cell)."""


class OracleLimitError(WflowError):
    """The exact transport oracle was asked for more atoms than it certifies."""


class DegeneracyError(WflowError):
    """A minimization step collapsed a mass cell below the vacuum floor."""


class ConvergenceError(WflowError):
    """An iterative solver failed to reach its tolerance.

    Carries the best iterate found and the residual at that iterate so
    callers can inspect partial results.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class SchemeAbortError(WflowError):
    """A multi-step run failed mid-way.

    Carries the partial trajectory computed before the failing step.
    """

    def __init__(self, message, partial=None, cause=None):
        super().__init__(message)
        self.partial = partial
        self.cause = cause


class DomainMismatchError(WflowError):
    """Two objects that must share a spatial domain do not."""


class IncompleteLedgerError(WflowError):
    """A trajectory was submitted for audit without full per-step diagnostics."""


class FitInvalidError(WflowError):
    """Measured data is unusable for a log-log rate fit."""
