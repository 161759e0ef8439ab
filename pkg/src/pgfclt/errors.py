"""Exception hierarchy.

Numerical failures subclass :class:`NumericalError` so the CLI can map them
to a dedicated exit code.
"""

from __future__ import annotations


class PgfCltError(Exception):
    """Base class for all package errors."""


class InvalidInput(PgfCltError, ValueError):
    pass


class NegativeWeight(InvalidInput):
    pass


class AllZero(InvalidInput):
    pass


class NonFinite(InvalidInput):
    pass


class NotNormalized(InvalidInput):
    pass


class MTooLarge(InvalidInput):
    pass


class KTooLarge(InvalidInput):
    pass


class NonPositiveR(InvalidInput):
    pass


class DegreeZero(InvalidInput):
    pass


class OutOfRange(InvalidInput):
    pass


class ThetaTooLarge(InvalidInput):
    pass


class PositiveRealRoot(InvalidInput):
    pass


class OutsideDomain(InvalidInput):
    pass


class NTooSmall(InvalidInput):
    pass


class BadEpsilon(InvalidInput):
    pass


class ZeroVariance(InvalidInput):
    pass


class ParseError(InvalidInput):
    pass


class NumericalError(PgfCltError, ArithmeticError):
    pass


class NoConvergence(NumericalError):
    pass


class TruncationInsufficient(NumericalError):
    pass


class FormsDisagree(NumericalError):
    pass


class RootOnUnitCircle(NumericalError):
    """A root lies in the unit-circle guard band; the PMF must be tilted first.

    ``suggested_r`` carries a tilt that clears the band when the caller
    computed one.
    """

    def __init__(self, message: str, suggested_r: float | None = None):
        super().__init__(message)
        self.suggested_r = suggested_r
