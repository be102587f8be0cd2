"""Exception hierarchy shared by the algebra, model and oracle layers."""


class QesError(Exception):
    """Base class for all errors raised by this package."""


class ConstraintViolated(QesError):
    """The quasi-exactness constraint c1 + n*b2 = 0 does not hold."""


class VanishingDenominator(QesError):
    """A recursion denominator (k+1)(b0 - k*a) is zero."""


class NegativeDiscriminant(QesError):
    pass


class NonNegativeEnergy(QesError):
    """A model needing sqrt(-2E) was handed E >= 0."""


class InvalidParameters(QesError, ValueError):
    pass


class NoAdmissibleRoot(QesError):
    pass


class BracketExhausted(QesError):
    pass


class InvalidGrid(QesError, ValueError):
    pass


class NoSignChange(QesError):
    pass


class StiffFailure(QesError):
    pass


class NotConverged(QesError):
    pass


class DegreeTooLarge(QesError, ValueError):
    pass
