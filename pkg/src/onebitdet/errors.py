"""Exception types raised by the library.

Two families exist so the CLI can map them onto exit codes: ``ValidationError``
for bad inputs (exit 1) and ``NumericalError`` for numerical failures such as a
covariance that cannot be factorized (exit 2).
"""


class ValidationError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


class LengthTooShort(ValidationError):
    pass


class PriorOutOfRange(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class DegenerateVariance(ValidationError):
    pass


class RejectedCovariance(NumericalError):
    """An active run's covariance is not positive definite (exact mode)."""


class NotPositiveDefinite(NumericalError):
    pass


class DegenerateLog(NumericalError):
    pass


class NegativeVariance(NumericalError):
    pass
