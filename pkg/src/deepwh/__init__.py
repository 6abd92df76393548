"""Deep matrix Wiener-Hopf factorisation of stable processes.

Matrix exponents of the Lamperti-stable Markov additive process, explicit
ladder factors built from Bernstein functions, exit and Cramer-type laws of
the stable process, and Monte Carlo estimators that check them.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetError,
    DeepWHError,
    DegenerateError,
    DomainError,
    InadmissibleError,
    NoConvergence,
    PoleError,
    RegimeError,
)
from .quadrature import DEFAULT_QUAD, QuadConfig
from .stable_params import StableParams, char_exponent, validate

__all__ = [
    "__version__",
    "BudgetError",
    "DeepWHError",
    "DegenerateError",
    "DomainError",
    "InadmissibleError",
    "NoConvergence",
    "PoleError",
    "RegimeError",
    "DEFAULT_QUAD",
    "QuadConfig",
    "StableParams",
    "char_exponent",
    "validate",
]
