"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(DomainError):
    """The (lambda, digits) configuration is outside the supported regime."""


class BudgetError(RuntimeError):
    """An atom, cell, or enumeration budget would be exceeded."""


class ConvergenceError(RuntimeError):
    """An iterative refinement or root search failed to converge."""
