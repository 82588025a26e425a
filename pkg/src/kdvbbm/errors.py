"""Exception hierarchy shared by every module."""


class KdvBbmError(Exception):
    """Base class for all package errors."""


class ConfigurationError(KdvBbmError, ValueError):
    """Invalid grid, exponent, or run configuration."""


class ShapeError(KdvBbmError, ValueError):
    """Array sizes or time grids do not match."""


class SymbolError(KdvBbmError, ArithmeticError):
    """A multiplier symbol is singular or non-finite on the grid."""


class PreconditionError(KdvBbmError, ValueError):
    """A mathematical precondition of an operation is violated."""


class RangeError(PreconditionError):
    """(s, p) lies outside the admissible range of an estimate."""


class UndefinedRatio(KdvBbmError, ArithmeticError):
    """The right-hand side of an inequality vanishes."""


class BlowupError(KdvBbmError, RuntimeError):
    """The numerical solution became non-finite or exceeded the blowup cap.

    ``time`` is the last time reached and ``partial`` carries whatever was
    recorded before the failure (a Trajectory or a split ledger).
    """

    def __init__(self, message, time=None, partial=None):
        super().__init__(message)
        self.time = time
        self.partial = partial
