"""Two families of Bernstein functions built from the stable parameters.

For ``q, p`` in ``{alpha rho, alpha rho_hat}`` with ``q + p = alpha`` and
``i + j = 1`` the kappa family is::

    kappa(s) = int_0^inf (1 - e^{-s x}) c e^{-alpha x} (1 - e^{-x})^{-(q+i)} (1 + e^{-x})^{-(p+j)} dx

with ``c = max(q+i, p+j) - 1``, and the phi family is::

    phi(s) = int_0^inf (1 - e^{-s u}) { c (1 - e^{-u})^{-(q+i)} (1 + e^{-u})^{-(p+j)}
                                        - (alpha - 1)/2 (1 - e^{-u})^{-q} (1 + e^{-u})^{-p} } e^{-u} du.

Besides the functions themselves this module provides their mean values
``f'(0+)``, the Laplace transform ``int e^{-s x} density`` of the Levy
density and its total mass.  The last two are finite only for the index
sets without the ``+1`` on the ``(1 - e^{-x})`` factor.

Every integral is evaluated in ``u = e^{-x}`` on (0, 1), with the factor
``(1 - u^s) / (1 - u)`` formed from ``expm1`` so that it stays accurate at
``u -> 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quadrature import DEFAULT_QUAD, QuadConfig, integrate_0inf, integrate_01
from .stable_params import StableParams


@dataclass(frozen=True)
class FactorIndices:
    """Index selector ``(q, p, i, j)`` of the Bernstein families.

    Use :meth:`of` to build the four admissible combinations by name.
    """

    q: float
    p: float
    i: int
    j: int

    @classmethod
    def of(cls, params: StableParams, first: str, plus_one: str) -> "FactorIndices":
        """Build indices from names.

        Parameters
        ----------
        first : {"rho", "rho_hat"}
            Whether ``q = alpha rho`` or ``q = alpha rho_hat``.
        plus_one : {"first", "second"}
            Which exponent carries the ``+1``: the ``(1 - e^{-x})`` factor
            (``i = 1``) or the ``(1 + e^{-x})`` factor (``j = 1``).
        """
        if first not in ("rho", "rho_hat") or plus_one not in ("first", "second"):
            raise DomainError(f"unknown index names ({first!r}, {plus_one!r})")
        q = params.arho if first == "rho" else params.arho_hat
        i = 1 if plus_one == "first" else 0
        return cls(q=q, p=params.alpha - q, i=i, j=1 - i)

    def validate(self, params: StableParams) -> None:
        if self.i + self.j != 1 or {self.i, self.j} != {0, 1}:
            raise DomainError("indices need i + j = 1 with i, j in {0, 1}")
        pair = sorted((self.q, self.p))
        target = sorted((params.arho, params.arho_hat))
        if not (math.isclose(pair[0], target[0], abs_tol=1e-12) and math.isclose(pair[1], target[1], abs_tol=1e-12)):
            raise DomainError(f"(q, p) = ({self.q}, {self.p}) is not a permutation of (alpha rho, alpha rho_hat)")

    @property
    def a(self) -> float:
        """Exponent of ``(1 - e^{-x})``."""
        return self.q + self.i

    @property
    def b(self) -> float:
        """Exponent of ``(1 + e^{-x})``."""
        return self.p + self.j

    @property
    def coefficient(self) -> float:
        return max(self.a, self.b) - 1.0

    @property
    def has_finite_mass(self) -> bool:
        """Whether the Levy density is integrable at the origin."""
        return self.i == 0

    def mirror(self) -> "FactorIndices":
        """The same index set with ``alpha rho`` and ``alpha rho_hat`` exchanged (for the dual)."""
        return FactorIndices(q=self.p, p=self.q, i=self.i, j=self.j)


def standard_indices(params: StableParams) -> dict[str, FactorIndices]:
    """The four index sets used by the ladder matrices, keyed by their exponent pairs.

    ``"A"`` is ``(a+1, a_hat)``, ``"B"`` is ``(a_hat, a+1)``, ``"C"`` is
    ``(a_hat+1, a)`` and ``"D"`` is ``(a, a_hat+1)`` with ``a = alpha rho``.
    """
    return {
        "A": FactorIndices.of(params, "rho", "first"),
        "B": FactorIndices.of(params, "rho_hat", "second"),
        "C": FactorIndices.of(params, "rho_hat", "first"),
        "D": FactorIndices.of(params, "rho", "second"),
    }


def _as_s(s) -> np.ndarray:
    return np.atleast_1d(np.asarray(s, dtype=complex))


def _finish(out, s):
    out = np.asarray(out)
    if np.ndim(s) == 0:
        out = out[0]
    if np.all(np.imag(out) == 0):
        out = np.real(out)
    return out


def _log_u(u, w):
    """``ln u`` accurate near both endpoints."""
    return np.where(u < 0.5, np.log(u), np.log1p(-np.minimum(w, 0.5)))


def _one_minus_pow_over_w(s, u, w):
    """``(1 - u^s) / (1 - u)`` for node arrays ``u`` (column) and exponents ``s`` (row)."""
    lu = _log_u(u, w)[:, None]
    return -np.expm1(s[None, :] * lu) / w[:, None]


def _x_over_w(u, w):
    """``-ln(u) / (1 - u)``, bounded near ``u = 1``."""
    return -_log_u(u, w) / w


# Density building blocks in the u variable.  Each returns the density times
# (1 - u) and the Jacobian, so that multiplying by (1 - u^s)/(1 - u) or by
# u^s / (1 - u) gives the integrand.
def _kappa_block(params: StableParams, idx: FactorIndices, u, w):
    al = params.alpha
    return idx.coefficient * u ** (al - 1.0) * w ** (1.0 - idx.a) * (1.0 + u) ** (-idx.b)


def _phi_block(params: StableParams, idx: FactorIndices, u, w):
    al = params.alpha
    first = idx.coefficient * w ** (1.0 - idx.a) * (1.0 + u) ** (-idx.b)
    second = 0.5 * (al - 1.0) * w ** (1.0 - idx.q) * (1.0 + u) ** (-idx.p)
    return first - second


def _family(name: str):
    if name == "kappa":
        return _kappa_block, lambda params: params.alpha
    if name == "phi":
        return _phi_block, lambda params: 1.0
    raise DomainError(f"unknown family {name!r}")


def _bernstein(params, idx, s, cfg, family):
    idx.validate(params)
    block, decay = _family(family)
    rate = decay(params)
    ss = _as_s(s)
    if np.any(ss.real <= -rate):
        raise DomainError(f"{family}_qp needs Re s > {-rate:g}")
    min_re = min(0.0, float(ss.real.min()))
    left = 1.0 - rate - min_re
    right = idx.a - 1.0

    def integrand(u, w):
        return _one_minus_pow_over_w(ss, u, w) * block(params, idx, u, w)[:, None]

    out = integrate_01(integrand, left, right, cfg, complement=True)
    return _finish(out, s)


def _laplace(params, idx, s, cfg, family):
    idx.validate(params)
    if not idx.has_finite_mass:
        raise DomainError(
            f"Levy density with exponent {idx.a:g} at the origin has infinite mass; "
            "its Laplace transform is defined only for index sets with i = 0"
        )
    block, decay = _family(family)
    rate = decay(params)
    ss = _as_s(s)
    if np.any(ss.real <= -rate):
        raise DomainError(f"Laplace transform needs Re s > {-rate:g}")
    min_re = min(0.0, float(ss.real.min()))
    left = 1.0 - rate - min_re
    right = idx.a

    def integrand(u, w):
        lu = _log_u(u, w)[:, None]
        return np.exp(ss[None, :] * lu) / w[:, None] * block(params, idx, u, w)[:, None]

    out = integrate_01(integrand, left, right, cfg, complement=True)
    return _finish(out, s)


def _deriv0(params, idx, cfg, family):
    idx.validate(params)
    block, decay = _family(family)
    rate = decay(params)

    def integrand(u, w):
        return _x_over_w(u, w) * block(params, idx, u, w)

    return float(np.real(integrate_01(integrand, 1.0 - rate, idx.a - 1.0, cfg, complement=True)))


def kappa_qp(params: StableParams, idx: FactorIndices, s, cfg: QuadConfig = DEFAULT_QUAD):
    """Bernstein function of the kappa family at (possibly complex, possibly array) ``s``.

    Raises
    ------
    DomainError
        If ``Re s <= -alpha`` or the indices are inconsistent with ``params``.
    NoConvergence
        From the quadrature.
    """
    return _bernstein(params, idx, s, cfg, "kappa")


def kappa_qp_deriv0(params: StableParams, idx: FactorIndices, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Mean value ``kappa'(0+) = int x density(x) dx``."""
    return _deriv0(params, idx, cfg, "kappa")


def kappa_qp_laplace(params: StableParams, idx: FactorIndices, s, cfg: QuadConfig = DEFAULT_QUAD):
    """Laplace transform ``int e^{-s x} density(x) dx`` of a finite-mass kappa Levy density.

    Equals ``kappa(inf) - kappa(s)`` but is integrated directly, without the
    cancellation of that difference.
    """
    return _laplace(params, idx, s, cfg, "kappa")


def kappa_qp_mass(params: StableParams, idx: FactorIndices, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Total mass ``kappa(inf)`` of a finite-mass kappa Levy density."""
    return float(np.real(kappa_qp_laplace(params, idx, 0.0, cfg)))


def phi_qp(params: StableParams, idx: FactorIndices, s, cfg: QuadConfig = DEFAULT_QUAD):
    """Bernstein function of the phi family at ``s`` with ``Re s > -1``."""
    return _bernstein(params, idx, s, cfg, "phi")


def phi_qp_deriv0(params: StableParams, idx: FactorIndices, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Mean value ``phi'(0+)``."""
    return _deriv0(params, idx, cfg, "phi")


def phi_qp_laplace(params: StableParams, idx: FactorIndices, s, cfg: QuadConfig = DEFAULT_QUAD):
    """Laplace transform of a finite-mass phi Levy density (see :func:`kappa_qp_laplace`)."""
    return _laplace(params, idx, s, cfg, "phi")


def phi_qp_mass(params: StableParams, idx: FactorIndices, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Total mass ``phi(inf)`` of a finite-mass phi Levy density."""
    return float(np.real(phi_qp_laplace(params, idx, 0.0, cfg)))


def kappa_density(params: StableParams, idx: FactorIndices, x):
    """Levy density of the kappa family at ``x > 0``."""
    x = np.asarray(x, dtype=float)
    em = -np.expm1(-x)
    return idx.coefficient * np.exp(-params.alpha * x) * em ** (-idx.a) * (1.0 + np.exp(-x)) ** (-idx.b)


def phi_density(params: StableParams, idx: FactorIndices, x):
    """Levy density of the phi family (the curly bracket times ``e^{-x}``) at ``x > 0``."""
    x = np.asarray(x, dtype=float)
    em = -np.expm1(-x)
    ep = 1.0 + np.exp(-x)
    first = idx.coefficient * em ** (-idx.a) * ep ** (-idx.b)
    second = 0.5 * (params.alpha - 1.0) * em ** (-idx.q) * ep ** (-idx.p)
    return (first - second) * np.exp(-x)


def phi1_double_integral_oracle(params: StableParams, lam: float, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """``pi_1 Phi_1(lam)`` by iterated quadrature of the uncollapsed double integral.

    Evaluates::

        lam * a * sin(pi a)/pi * int_0^1 z^{alpha-1} int_0^inf
            e^{-(lam+alpha) u} (1 + z e^{-u})^{-a_hat} (1 - z e^{-u})^{-(a+1)} du dz

    with ``a = alpha rho``; it should agree with
    ``sin(pi a)/pi * kappa_qp(A, lam)`` for the index set ``A = (a+1, a_hat)``.

    For fixed ``z`` the inner integrand has a peak of width ``1 - z`` at
    ``u = 0``.  The inner variable is therefore changed to ``t`` with
    ``z t = v / ((1 - z)/z + v)`` and ``v = 1 - e^{-u}``, which turns the
    inner integral into::

        (1 - z)^{-a} int_0^1 (1-t)^{lam+alpha-1} (1 - z t)^{-lam} (1 + z - 2 z t)^{-a_hat} dt,

    an integrand that is uniformly regular in ``z``.

    Raises
    ------
    DomainError
        If ``lam <= 0``.
    """
    if not lam > 0:
        raise DomainError("the double-integral route needs lam > 0")
    a, ah, al = params.arho, params.arho_hat, params.alpha
    inner_right = max(1.0 - a, 1.0 - lam - al, 0.0)

    def outer(z, wz):
        def inner(t, wt):
            wtt = wt[:, None]
            one_minus_zt = wz[None, :] + z[None, :] * wtt
            bracket = wz[None, :] + 2.0 * z[None, :] * wtt
            # Individual factors overflow at extreme nodes; their product does not.
            log_val = (lam + al - 1.0) * np.log(wtt) - lam * np.log(one_minus_zt) - ah * np.log(bracket)
            return np.exp(log_val)

        inner_val = integrate_01(inner, 0.0, inner_right, cfg, complement=True)
        return z ** (al - 1.0) * wz ** (-a) * inner_val

    total = integrate_01(outer, 1.0 - al, a, cfg, complement=True)
    return float(lam * a * params.sin_arho / math.pi * total)
