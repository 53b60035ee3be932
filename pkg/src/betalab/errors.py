"""Exception types raised across the package."""


class BetaLabError(Exception):
    """Base class for all domain errors."""


class DepthExhausted(BetaLabError):
    """A lexicographic comparison could not be decided within the allowed depth."""


class IndexOutOfRange(BetaLabError, IndexError):
    pass


class ParseError(BetaLabError, ValueError):
    pass


class NoSignChange(BetaLabError):
    """The bracket handed to a root solver does not straddle the crossing."""


class ToleranceUnreachable(BetaLabError):
    pass


class CapExceeded(BetaLabError):
    pass


class NotInOmega(BetaLabError):
    """The word is not a prefix of any expansion of x (postcondition probe failed)."""

    def __init__(self, message, observed=None):
        super().__init__(message)
        self.observed = observed


class HypothesisViolated(BetaLabError):
    pass


class AmbiguousDigit(BetaLabError):
    """A capped-precision orbit step landed too close to a digit boundary."""


class SlopeTooSmall(BetaLabError):
    pass


class UnsupportedForm(BetaLabError):
    pass


class RunFailed(BetaLabError):
    pass
