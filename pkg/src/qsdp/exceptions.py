"""Exception hierarchy shared by all qsdp modules."""


class QSDPError(Exception):
    """Base class for every error raised by qsdp."""


class InvalidInputError(QSDPError, ValueError):
    """Malformed operator, dimension mismatch or out-of-range parameter."""


class DomainError(QSDPError, ValueError):
    """A scalar function was evaluated outside its domain."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class NotPSDError(DomainError):
    """Operator expected to be positive semidefinite has a negative eigenvalue."""


class ScaleOverflowError(QSDPError, ArithmeticError):
    """Exponential argument beyond the overflow guard.

    Raised by the entropy-type conjugates; the line search treats it as an
    infinitely bad trial point and shrinks the step.
    """


class TruncationError(QSDPError, ValueError):
    """Fock truncation discarded (almost) the whole state."""
