"""Exception types shared across the package."""


class LatticeAnglesError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class NotSplit(LatticeAnglesError, ValueError):
    """The prime does not split in Z[i] (p = 2 or p = 3 mod 4)."""


class NotPrime(LatticeAnglesError, ValueError):
    pass


class PrecisionInsufficient(LatticeAnglesError, ArithmeticError):
    exit_code = 4


class TooFewPoints(LatticeAnglesError, ValueError):
    pass


class CutoffTooSmall(LatticeAnglesError, ValueError):
    pass


class Unsupported(LatticeAnglesError, NotImplementedError):
    pass


class InfeasibleR(LatticeAnglesError, ValueError):
    exit_code = 3


class InfeasibleN(LatticeAnglesError, ValueError):
    exit_code = 3


class InfeasibleExact(LatticeAnglesError, ValueError):
    exit_code = 3


class TooLarge(LatticeAnglesError, ValueError):
    exit_code = 3


class RankDeficient(LatticeAnglesError, ValueError):
    pass


class EmptyFamily(LatticeAnglesError, ValueError):
    pass


class ZeroK(LatticeAnglesError, ValueError):
    """L(s, 0) has a pole at s = 1."""
