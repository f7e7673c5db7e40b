"""Exception types raised across the package."""


class MomentUPError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(MomentUPError, ValueError):
    """An argument violates an operation's precondition."""


class CutoffTooSmallError(MomentUPError, ValueError):
    """The Fock-space truncation cannot represent the requested quantity."""


class InvalidStateError(MomentUPError, ValueError):
    """A density matrix fails Hermiticity, trace or positivity checks."""


class SingularAError(MomentUPError, ArithmeticError):
    """The second-order block is singular; use the singular Schur branch."""


class NumericalFailureError(MomentUPError, ArithmeticError):
    """A numerical consistency check failed beyond tolerance."""


class GridTooSmallError(InvalidArgumentError):
    """A phase-space grid is too coarse or too narrow for the state."""
