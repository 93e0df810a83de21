"""Exception hierarchy.

Every error a caller can trigger by bad input derives from PreconditionError,
which the command-line front end maps to exit code 2.
"""


class SpectralError(Exception):
    """Base class for all package errors."""


class PreconditionError(SpectralError, ValueError):
    """An operation was called outside its domain."""


class NonFiniteCoefficient(PreconditionError):
    pass


class OrderMismatch(PreconditionError):
    pass


class ZeroConstantTerm(PreconditionError):
    """The constant term vanishes, so the formal logarithm is undefined."""


class NonUnimodular(PreconditionError):
    pass


class SeriesOverflow(SpectralError, OverflowError):
    pass


class NearPole(PreconditionError):
    """lambda sits on a forced point m(0)*beta**n of the resolvent recurrence."""

    def __init__(self, n: int, distance: float):
        super().__init__(f"lambda is within {distance:.3e} of m(0)*beta^{n}")
        self.n = n
        self.distance = distance


class ZeroAtOrigin(PreconditionError):
    pass


class ConditionFails(PreconditionError):
    pass


class StructuralTestFailed(PreconditionError):
    pass


class ZerosUnavailable(PreconditionError):
    pass


class MissingBoundaryData(PreconditionError):
    pass


class PhaseAmbiguity(SpectralError):
    """Argument-principle sampling could not resolve the winding number."""


class ContourRejected(PreconditionError):
    pass


class PrecisionExhausted(SpectralError):
    def __init__(self, achieved_depth: int):
        super().__init__(f"precision exhausted at depth {achieved_depth}")
        self.achieved_depth = achieved_depth


class NotElliptic(PreconditionError):
    pass


class NotAutomorphism(PreconditionError):
    pass
