"""Exception hierarchy shared across the package."""


class MaxRobustError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MaxRobustError, ValueError):
    """An argument violates a precondition (shape, finiteness, range)."""


class SymmetryError(InvalidInputError):
    """A spectrum is not Hermitian-symmetric, so it has no real inverse."""


class DatasetFormatError(MaxRobustError, ValueError):
    """A dataset or checkpoint file could not be parsed."""


class StepSizeError(MaxRobustError, RuntimeError):
    """Training diverged; the step size is too large.

    ``last_finite_step`` is the index of the last iterate with finite risk.
    """

    def __init__(self, message, last_finite_step):
        super().__init__(message)
        self.last_finite_step = last_finite_step


class InfeasibleError(MaxRobustError):
    """The minimum-norm problem has no feasible point (data not separable).

    ``ray`` holds a Farkas-type certificate: nonnegative weights ``alpha``
    with ``sum(alpha) = 1`` and ``A.T @ alpha = 0`` where ``A[i] = y_i x_i``.
    """

    def __init__(self, message, ray=None):
        super().__init__(message)
        self.ray = ray


class CertificationError(MaxRobustError, RuntimeError):
    """A first-order solver hit its iteration ceiling without certifying."""
