"""Exception and warning types shared across the package.

Validation errors (bad input, bad config) and numerical errors (overflow,
vanishing modulus, quadrature trouble) are kept in separate branches so the
command line can map them to distinct exit codes.
"""


class NullLabError(Exception):
    """Base class for all package errors."""


class ValidationError(NullLabError, ValueError):
    """Input or configuration is invalid."""


class NumericalError(NullLabError, ArithmeticError):
    """A numerical precondition failed during evaluation."""


class EmptySample(ValidationError):
    pass


class DegenerateSampleSize(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class MissingDelta(ValidationError):
    pass


class PlanError(ValidationError):
    pass


class ZeroFrequency(NumericalError):
    pass


class ZeroModulus(NumericalError):
    pass


class ExponentOverflow(NumericalError, OverflowError):
    """An exponent exceeded the overflow guard.

    ``index`` names the offending sample when the failure came from a sum.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class QuadratureFailure(NumericalError):
    pass


class CellFailure(NumericalError):
    """Too many repetitions of a Monte-Carlo cell raised errors."""

    def __init__(self, message, coords):
        super().__init__(message)
        self.coords = coords


class NearZeroModulusWarning(RuntimeWarning):
    pass


class GammaWindowWarning(UserWarning):
    """gamma lies outside the consistency window (0, 1/A)."""


class DegenerateVarianceWarning(RuntimeWarning):
    pass
