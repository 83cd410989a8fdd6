"""Exception hierarchy shared by every covfield module."""


class CovFieldError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ValidationError(CovFieldError, ValueError):
    """Malformed input: wrong shape, off-manifold point, bad file."""

    exit_code = 2


class MismatchedBase(ValidationError):
    """A tangent vector was used at a point other than its base point."""


class CutLocus(CovFieldError):
    """The log map is undefined: a point lies on the cut locus of the base."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class ChartOverflow(CovFieldError):
    """A numerical trajectory left the valid region of its chart."""


class SingularJacobian(CovFieldError):
    """A chart Jacobian is numerically singular."""


class NotSpd(CovFieldError):
    """A matrix that must be symmetric positive definite is not."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DomainError(CovFieldError):
    """A function was evaluated outside its domain (e.g. log of zero)."""


class NoConvergence(CovFieldError):
    """An iterative method hit its iteration cap."""


class RankDeficientWarning(UserWarning):
    """The Y matrix of a recovery problem is numerically rank deficient."""
