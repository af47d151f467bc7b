"""Exception types raised across the package."""


class BimmppError(Exception):
    """Base class for all library errors."""


class ValidationError(BimmppError, ValueError):
    """Input violates a documented precondition."""


class NumericalError(BimmppError, ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class ShapeMismatch(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class TooShort(ValidationError):
    pass


class UnsupportedOrder(ValidationError):
    pass


class SingularMatrix(NumericalError):
    pass


class Reducible(NumericalError):
    """The stationary vector is not unique."""


class DegenerateChain(NumericalError):
    pass


class ZeroVariance(NumericalError):
    """A correlation is undefined because the dependence structure is degenerate."""


class Divergent(NumericalError):
    """A transform was evaluated outside its domain of convergence."""


class NoConvergence(NumericalError):
    pass


class HorizonTooShort(ValidationError):
    """Simulated paths do not reach a queried threshold often enough."""


class EmptyCondition(NumericalError):
    """A conditional probability was requested on an event with no observations."""
