"""Exception hierarchy.

Every error raised by the library derives from :class:`QdivError`. The two
intermediate classes decide the command-line exit code: input problems are
:class:`ValidationError` (exit 2), numerical breakdowns are
:class:`NumericalError` (exit 3).
"""


class QdivError(Exception):
    """Base class for all library errors."""


class ValidationError(QdivError, ValueError):
    """An input violates a documented precondition."""


class NumericalError(QdivError, ArithmeticError):
    """A computation could not be completed reliably."""


# opcore
class NonHermitian(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class NotAState(ValidationError):
    pass


class NotTraceless(ValidationError):
    pass


class SupportViolation(ValidationError):
    pass


class BadRank(ValidationError):
    pass


# funcs
class DomainError(ValidationError):
    pass


# divergences
class SupportMismatch(ValidationError):
    pass


class GridLeavesStateSpace(ValidationError):
    pass


class PureStateBase(ValidationError):
    pass


class UnknownMeasure(ValidationError):
    pass


# channels
class NotCPTP(ValidationError):
    pass


class BadParameter(ValidationError):
    pass


class NoFixedPoint(NumericalError):
    pass


# coefficients
class SingularBase(ValidationError):
    pass


class NotAFixedPoint(ValidationError):
    pass


class DegenerateSubspace(ValidationError):
    pass


class UnboundedKernel(ValidationError):
    pass


class HypothesisFailed(ValidationError):
    """Preconditions of an analytic bound do not hold."""


# certificates / markov
class PurityPreserving(ValidationError):
    pass


class NoWitnessFound(NumericalError):
    pass


class NotPrimitive(ValidationError):
    pass


class MTooSmall(ValidationError):
    pass


class EtaIsOne(NumericalError):
    pass
