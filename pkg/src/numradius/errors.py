"""Exception hierarchy shared by all modules."""


class NumRadiusError(Exception):
    """Base class for errors raised by :mod:`numradius`."""


class DimensionMismatch(NumRadiusError, ValueError):
    """A vector, functional or operator does not match its space."""


class NotPolyhedral(NumRadiusError):
    """Vertex enumeration was requested for a ball with infinitely many extreme points."""


class CapExceeded(NumRadiusError):
    """Combinatorial enumeration would exceed the configured dimension cap."""


class NotAState(NumRadiusError):
    """A pair (x, x*) violates one of the state equalities.

    ``violated`` names the failing condition: ``"norm"``, ``"dual_norm"``,
    ``"pairing"`` or ``"support"``.
    """

    def __init__(self, violated, detail=""):
        self.violated = violated
        super().__init__(f"not a state: {violated} violated {detail}".rstrip())


class NotCertified(NumRadiusError):
    """A quantity could only be bracketed, not pinned to a point value."""

    def __init__(self, message, bracket):
        super().__init__(f"{message}: [{bracket.lo!r}, {bracket.hi!r}]")
        self.bracket = bracket


class ZeroRadius(NumRadiusError):
    """The operator has numerical radius zero, so attainment is vacuous."""


class UnsupportedSpace(NumRadiusError):
    """The operation is not implemented for this kind of space."""


class PreconditionFailed(NumRadiusError, ValueError):
    """An input violates a stated precondition of the operation."""


class HypothesisFailed(NumRadiusError):
    """The near-attainment hypothesis of a corrector is not met.

    ``gap`` is the measured shortfall and ``threshold`` the required bound.
    """

    def __init__(self, message, gap=None, threshold=None):
        self.gap = gap
        self.threshold = threshold
        super().__init__(message)


class VerificationError(NumRadiusError, AssertionError):
    """A computed object failed its own postcondition check."""
