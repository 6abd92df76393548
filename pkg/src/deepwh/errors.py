"""Exception hierarchy shared by every module of the package."""


class DeepWHError(Exception):
    """Base class for all package errors."""


class DomainError(DeepWHError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class PoleError(DomainError):
    """A gamma function was evaluated at one of its poles."""


class InadmissibleError(DomainError):
    """The pair (alpha, rho) is outside the admissible stable parameter set."""


class RegimeError(DomainError):
    """An operation was requested for the wrong range of alpha."""


class NoConvergence(DeepWHError, ArithmeticError):
    """A numerical scheme failed to meet its tolerance within its budget."""


class DegenerateError(DeepWHError, ArithmeticError):
    """A spectral or structural quantity is degenerate (zero gap, zero rate)."""


class BudgetError(DeepWHError, RuntimeError):
    """A simulated path exceeded its step cap."""
