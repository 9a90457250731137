"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain of an operation (shape, symmetry, range)."""


class NumericError(ArithmeticError):
    """A numerical routine failed (non-convergence, singular system)."""


class ConvergenceError(NumericError):
    """An iterative solver hit its iteration cap.

    ``residual`` holds the last residual norm and ``iterations`` the count.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class UnsupportedSizeError(DomainError):
    """Requested problem size is beyond what the routine supports."""
