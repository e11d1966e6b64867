"""Exception hierarchy shared by the analysis modules and the CLI."""


class HardyError(Exception):
    """Base class for all errors raised by hardyctl."""


class DomainError(HardyError, ValueError):
    """An input lies outside the domain of an operation."""


class InputError(HardyError, ValueError):
    """Malformed or inconsistent user data (zero coefficients, bad shapes...)."""


class NumericalError(HardyError, ArithmeticError):
    """A computation could not be carried out to the required accuracy."""


class ConditioningError(NumericalError):
    """A Gram system is too ill-conditioned to solve.

    ``pair`` holds the indices of the two closest nodes (pseudo-hyperbolic
    distance), which are usually responsible.
    """

    def __init__(self, message, cond=None, pair=None):
        super().__init__(message)
        self.cond = cond
        self.pair = pair
