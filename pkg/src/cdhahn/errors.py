"""Exception types raised across the package."""


class CdhError(ValueError):
    """Base class for all package errors."""


class PoleError(CdhError):
    """A gamma function argument sits on a pole."""


class DomainError(CdhError):
    """Parameters fall outside the region where an operation is defined."""


class ArgumentError(CdhError):
    """Arguments violate an ordering or admissibility precondition."""


class ConvergenceError(CdhError):
    """An iterative approximation did not settle within tolerance."""


class NotNormalized(CdhError):
    """A probability measure was required but a sigma-finite one was given."""
