"""Exception types shared across the package."""


class LeibensonError(Exception):
    """Base class for all package-specific errors."""


class DomainError(LeibensonError, ValueError):
    """Raised when an argument lies outside the mathematical domain of an operation."""


class RegimeError(DomainError):
    """Raised when (d, p, q) fall outside the slow-diffusion regime q(p-1) > 1
    or outside the regime a particular operation requires."""


class ConvergenceError(LeibensonError, RuntimeError):
    """Raised when an iterative solve (root bracketing, quadrature-backed solve) fails."""


class BoundaryError(DomainError):
    """Raised when evaluating a quantity exactly on the free boundary where it is undefined."""


class SingularityError(DomainError):
    """Raised when evaluating a coefficient at a point where it is unbounded."""


class NumericalBlowup(LeibensonError, RuntimeError):
    """Raised by the particle engine when positions escape the admissible region.

    Carries the simulation time at which the blowup was detected.
    """

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class EmptyEnsemble(LeibensonError, ValueError):
    """Raised by statistics on an ensemble with no particles."""
