"""Exception types shared across the package."""


class HybridBFError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(HybridBFError, ValueError):
    """An array or size argument has an invalid/inconsistent dimension."""


class InvalidInputError(HybridBFError, ValueError):
    """An input violates a documented precondition (e.g. non-Hermitian matrix)."""


class InfeasibleError(HybridBFError):
    """A design is structurally infeasible for the given dimensions."""


class NumericalError(HybridBFError):
    """A numerical operation failed beyond the documented regularization."""
