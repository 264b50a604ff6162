"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`FormBoundError`, so callers can catch one type.
"""


class FormBoundError(Exception):
    """Base class for library errors."""


class InvalidParameter(FormBoundError, ValueError):
    """A scalar parameter is outside its documented domain."""


class AdmissibilityViolation(FormBoundError, ValueError):
    """A (delta, p) or (r, p, q) combination leaves the admissible regime."""


class ConvergenceFailure(FormBoundError, RuntimeError):
    """An iterative or quadrature routine exhausted its budget.

    Attributes
    ----------
    achieved : float
        Best error estimate reached before giving up.
    """

    def __init__(self, message, achieved=float("nan")):
        super().__init__(message)
        self.achieved = achieved


class DivergenceDetected(FormBoundError, RuntimeError):
    """The Neumann series stopped contracting.

    Raised when the observed term ratio stays at or above one; this is the
    observable signature of mu being too small or delta too large for p.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CalibrationFailure(FormBoundError, RuntimeError):
    """No mu on the supplied grid satisfied the calibration criteria."""


class ConfigError(FormBoundError, ValueError):
    """Experiment configuration could not be parsed or validated."""
