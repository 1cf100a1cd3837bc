"""Exception and warning classes raised by matgcd."""


class MatGcdError(Exception):
    """Base class for all matgcd errors."""


class DimensionError(MatGcdError, ValueError):
    pass


class ParameterError(MatGcdError, ValueError):
    pass


class NumericError(MatGcdError, ArithmeticError):
    pass


class StructureError(MatGcdError, ValueError):
    """A matrix is not (close enough to) a generalized Sylvester matrix."""


class NormalizationError(MatGcdError, ArithmeticError):
    """Leading coefficient is singular or too ill-conditioned to invert."""

    def __init__(self, message, smallest_singular_value=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class ConvergenceError(MatGcdError, RuntimeError):
    """An iteration ran out of budget.

    ``best`` holds the best iterate available at the point of failure, when
    the raising routine has one.
    """

    def __init__(self, message, best=None, trace=None):
        super().__init__(message)
        self.best = best
        self.trace = trace


class StalledIntegrationError(ConvergenceError):
    """Euler step size fell below the underflow threshold."""


class ContinuationStallError(ConvergenceError):
    """The free gradient phase could not grow the perturbation norm."""


class RankToleranceError(MatGcdError, ArithmeticError):
    """A pivot fell in the ambiguous band around the rank threshold."""


class CoalescenceWarning(RuntimeWarning):
    """The tracked singular value is (numerically) not simple."""


class NonConvergenceWarning(RuntimeWarning):
    pass


class ExtractionWarning(RuntimeWarning):
    """The common factor could not be extracted cleanly from a perturbed pair."""
