"""Admissible stable parameters, the Levy exponent and its scalar Wiener-Hopf factors.

A strictly stable process without one-sided jumps is indexed by the
stability index ``alpha`` in (0, 2) and the positivity parameter
``rho = P(X_t >= 0)``.  Every derived constant (Levy densities, skewness,
scale) is a read-only view of that pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InadmissibleError

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class StableParams:
    """Validated ``(alpha, rho)`` pair.

    Construction validates; an instance is always admissible.

    Attributes
    ----------
    alpha : float
        Stability index in (0, 2).
    rho : float
        Positivity parameter with ``rho`` in ``(1 - 1/alpha, 1/alpha)`` and
        ``0 < alpha*rho, alpha*(1-rho) < 1``; ``rho = 1/2`` when ``alpha = 1``.
    """

    alpha: float
    rho: float

    def __post_init__(self) -> None:
        alpha, rho = float(self.alpha), float(self.rho)
        if not (math.isfinite(alpha) and math.isfinite(rho)):
            raise InadmissibleError("alpha and rho must be finite")
        if not (BOUNDARY_TOL < alpha < 2.0 - BOUNDARY_TOL):
            raise InadmissibleError(f"alpha = {alpha} is not in (0, 2)")
        if alpha == 1.0:
            if abs(rho - 0.5) > 1e-12:
                raise InadmissibleError(f"alpha = 1 requires rho = 1/2, got rho = {rho}")
            rho = 0.5
        lo, hi = max(0.0, 1.0 - 1.0 / alpha), min(1.0, 1.0 / alpha)
        if not (lo + BOUNDARY_TOL < rho < hi - BOUNDARY_TOL):
            raise InadmissibleError(
                f"rho = {rho} is not admissible for alpha = {alpha}: "
                f"need rho in ({lo:.12g}, {hi:.12g})"
            )
        for name, val in (("alpha*rho", alpha * rho), ("alpha*(1-rho)", alpha * (1.0 - rho))):
            if not (BOUNDARY_TOL < val < 1.0 - BOUNDARY_TOL):
                raise InadmissibleError(f"{name} = {val} must lie strictly inside (0, 1)")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "rho", rho)

    @property
    def rho_hat(self) -> float:
        return 1.0 - self.rho

    @property
    def arho(self) -> float:
        """``alpha * rho``."""
        return self.alpha * self.rho

    @property
    def arho_hat(self) -> float:
        """``alpha * (1 - rho)``."""
        return self.alpha * self.rho_hat

    @property
    def sin_arho(self) -> float:
        """``sin(pi alpha rho)``."""
        return math.sin(math.pi * self.arho)

    @property
    def sin_arho_hat(self) -> float:
        """``sin(pi alpha (1 - rho))``."""
        return math.sin(math.pi * self.arho_hat)

    @property
    def regime(self) -> str:
        """``"small_alpha"`` for alpha in (0, 1], ``"big_alpha"`` for (1, 2)."""
        return "small_alpha" if self.alpha <= 1.0 else "big_alpha"

    @property
    def c_plus(self) -> float:
        """Levy density coefficient on the positive half-line."""
        return math.gamma(self.alpha + 1.0) * self.sin_arho / math.pi

    @property
    def c_minus(self) -> float:
        """Levy density coefficient on the negative half-line."""
        return math.gamma(self.alpha + 1.0) * self.sin_arho_hat / math.pi

    @property
    def scale(self) -> float:
        """``c = cos(pi alpha (rho - 1/2))``, the modulus factor of the exponent."""
        return math.cos(math.pi * self.alpha * (self.rho - 0.5))

    @property
    def skewness(self) -> float:
        """Skewness ``beta`` solving ``rho = 1/2 + arctan(beta tan(pi alpha/2)) / (pi alpha)``."""
        if self.alpha == 1.0:
            return 0.0
        return math.tan(math.pi * self.alpha * (self.rho - 0.5)) / math.tan(0.5 * math.pi * self.alpha)

    def swapped(self) -> "StableParams":
        """Parameters of the dual process ``-X``, i.e. ``rho`` and ``1 - rho`` exchanged."""
        return StableParams(self.alpha, self.rho_hat)

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "rho": self.rho}


def validate(alpha: float, rho: float) -> StableParams:
    """Return validated parameters or raise :class:`InadmissibleError`."""
    return StableParams(alpha, rho)


def char_exponent(params: StableParams, theta):
    """Characteristic exponent ``Psi(theta) = -log E exp(i theta X_1)``.

    ``Psi(theta) = |theta|^alpha exp(+-pi i alpha (1/2 - rho))`` with the sign of
    ``theta``; ``Psi(0) = 0``.
    """
    th = np.asarray(theta, dtype=float)
    phase = np.exp(1j * np.pi * params.alpha * (0.5 - params.rho) * np.sign(th))
    out = np.abs(th) ** params.alpha * phase
    out = np.where(th == 0.0, 0.0, out)
    return out[()] if out.ndim == 0 else out


def levy_wh_factors(params: StableParams, lam):
    """Ascending and descending ladder exponents ``(lam^(alpha rho), lam^(alpha rho_hat))``.

    Complex arguments use the principal branch ``lam^b = |lam|^b e^{i b arg lam}``,
    which is the analytic continuation needed on the imaginary axis.

    Raises
    ------
    DomainError
        For real negative arguments.
    """
    lam_arr = np.asarray(lam)
    if np.iscomplexobj(lam_arr):
        z = lam_arr.astype(complex)
        if np.any((z.imag == 0.0) & (z.real < 0.0)):
            raise DomainError("ladder exponents are not defined on the negative real axis")
        up = np.where(z == 0, 0.0, np.power(z, params.arho))
        down = np.where(z == 0, 0.0, np.power(z, params.arho_hat))
    else:
        x = lam_arr.astype(float)
        if np.any(x < 0):
            raise DomainError("ladder exponents need lambda >= 0")
        up, down = x**params.arho, x**params.arho_hat
    if np.ndim(up) == 0:
        return up[()], down[()]
    return up, down
