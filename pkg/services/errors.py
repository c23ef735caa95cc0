"""
services/errors.py
Exception hierarchy for the Kähler entropy services.

exit_code follows the CLI contract: 1 for domain/validation errors,
2 for numerical failures where a decision was required.
"""


class KahlerError(Exception):
    exit_code = 1


class InvalidParameterError(KahlerError):
    pass


class DimensionMismatchError(KahlerError):
    pass


class NonPositiveGammaError(KahlerError):
    pass


class NonPositiveScaleError(KahlerError):
    pass


class PointOutsideDomainError(KahlerError):
    pass


class UnsupportedModelError(KahlerError):
    pass


class PreconditionError(KahlerError):
    pass


class NumericalError(KahlerError):
    exit_code = 2


class BelowThresholdError(NumericalError):
    pass


class DivergentNormError(NumericalError):
    pass


class FactorizationError(NumericalError):
    pass


class QuadratureError(NumericalError):
    pass


class VanishingKernelError(NumericalError):
    pass


class NoBracketError(NumericalError):
    pass


class ContinuationError(NumericalError):
    pass
