"""Exception hierarchy.

Domain errors (bad input, violated preconditions) map to CLI exit code 2,
solver errors map to exit code 3.
"""


class ScoreKitError(Exception):
    """Base class for all library errors."""


class DomainError(ScoreKitError, ValueError):
    """A precondition on the input data or configuration is violated."""


class SolverError(ScoreKitError, RuntimeError):
    """A numerical routine failed to produce a certified result."""


class DimensionMismatch(DomainError):
    pass


class TooFewPoints(DomainError):
    pass


class DuplicatePoints(DomainError):
    pass


class EmptyData(DomainError):
    pass


class BetaTooSmall(DomainError):
    pass


class BetaOutOfRegime(DomainError):
    pass


class TOutOfRange(DomainError):
    pass


class NotApplicable(DomainError):
    pass


class DimensionTooLarge(DomainError):
    pass


class DimensionTooSmall(DomainError):
    pass


class BadEpsilon(DomainError):
    pass


class BadBeta(DomainError):
    pass


class LengthMismatch(DomainError):
    pass


class UnboundedObjective(SolverError):
    pass


class SplitInfeasible(SolverError):
    pass


class NonFiniteState(SolverError):
    def __init__(self, message, step=None, chain=None):
        super().__init__(message)
        self.step = step
        self.chain = chain


class NotConverged(SolverError):
    pass
