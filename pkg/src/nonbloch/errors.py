"""Exception hierarchy shared by all modules.

Every error raised on purpose by the library derives from NonBlochError so the
CLI can map it to exit code 1 with a one-line message.
"""


class NonBlochError(Exception):
    """Base class for domain errors."""


class DomainError(NonBlochError, ValueError):
    pass


class UnsupportedModelError(NonBlochError):
    pass


class SizeError(NonBlochError, ValueError):
    pass


class DegeneratePolynomialError(NonBlochError):
    pass


class ConvergenceError(NonBlochError):
    def __init__(self, message, worst_residual=None):
        super().__init__(message)
        self.worst_residual = worst_residual


class ConstructionError(NonBlochError):
    pass


class MultivaluedContourError(ConstructionError):
    pass


class WindowError(NonBlochError):
    pass


class DegenerateContourError(NonBlochError):
    """The contour coincides with the unit circle (no isolated Bloch points)."""


class NoRealBlochPointError(NonBlochError):
    pass


class ClassificationError(NonBlochError):
    pass


class NoPeriodError(NonBlochError):
    pass


class SelectionError(NonBlochError):
    pass


class RuleMismatchError(SelectionError):
    pass


class UnreliableEnvelopeError(NonBlochError):
    def __init__(self, message, r2=None):
        super().__init__(message)
        self.r2 = r2


class FitError(NonBlochError):
    pass


class OutOfScopeError(NonBlochError):
    pass


class DegenerateRootError(NonBlochError):
    pass
