"""Exception hierarchy shared across the package."""


class BsaError(Exception):
    """Base class for every error raised by bsakit."""


class InvalidInput(BsaError, ValueError):
    """Input violates a documented precondition or type invariant."""


class NotPositive(InvalidInput):
    """Matrix has an eigenvalue below the allowed negative tolerance."""


class NotPpt(InvalidInput):
    """State was required to have a positive partial transpose."""


class RangeViolation(InvalidInput):
    """Vector lies outside the range of the reference operator."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class Degenerate(InvalidInput):
    """Construction hit a degenerate configuration (e.g. a product input)."""


class WrongRank(InvalidInput):
    """Operator rank differs from the rank the construction needs."""


class InternalError(BsaError, RuntimeError):
    """An invariant that should hold by construction was violated."""
