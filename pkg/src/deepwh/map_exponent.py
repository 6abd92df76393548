"""Matrix exponents of the two-state Markov additive process underlying a stable process.

Through the Lamperti-Kiu representation, ``log|X|`` modulated by the sign of
``X`` is a Markov additive process (MAP) with two states (1: positive,
2: negative).  Its matrix exponent ``F(z)``, defined by
``E_{0,i}[exp(z xi_1); J_1 = j] = (exp F(z))_{ij}``, is an explicit matrix of
gamma ratios on the strip ``-1 < Re z < alpha``.  The exponent ``F_circ`` of
the Riesz-Bogdan-Zak transformed process and the dual exponent ``F_hat`` live
on ``-alpha < Re z < 1``.

All functions accept scalar or array ``z`` and return arrays of shape
``z.shape + (2, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError
from .special_fn import gamma_ratio
from .stable_params import StableParams


@dataclass(frozen=True)
class EigenPair:
    """Leading eigenvalue ``chi`` and right eigenvector ``v`` normalised by ``pi . v = 1``."""

    chi: float
    v: np.ndarray


def _as_z(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


def _check_strip(z: np.ndarray, lo: float, hi: float, name: str) -> None:
    re = z.real
    if np.any((re <= lo) | (re >= hi)):
        raise DomainError(f"{name} is defined for {lo:g} < Re z < {hi:g}; got Re z = {re.ravel()[0]:g}")


def _assemble(f11, f12, f21, f22) -> np.ndarray:
    f11, f12, f21, f22 = np.broadcast_arrays(f11, f12, f21, f22)
    out = np.empty(f11.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = f11
    out[..., 0, 1] = f12
    out[..., 1, 0] = f21
    out[..., 1, 1] = f22
    return out


def F(params: StableParams, z) -> np.ndarray:
    """Matrix exponent of the MAP ``(xi, J)`` on ``-1 < Re z < alpha``.

    With ``A(z) = Gamma(alpha - z) Gamma(1 + z)``::

        F11 = -A / (Gamma(a_hat - z) Gamma(1 - a_hat + z))
        F12 =  A / (Gamma(a_hat) Gamma(1 - a_hat))
        F21 =  A / (Gamma(a) Gamma(1 - a))
        F22 = -A / (Gamma(a - z) Gamma(1 - a + z))

    where ``a = alpha rho`` and ``a_hat = alpha (1 - rho)``.
    """
    z = _as_z(z)
    _check_strip(z, -1.0, params.alpha, "F")
    a, ah, al = params.arho, params.arho_hat, params.alpha
    num = (al - z, 1.0 + z)
    f11 = -gamma_ratio(num, (ah - z, 1.0 - ah + z))
    f12 = gamma_ratio(num, (ah + 0 * z, 1.0 - ah + 0 * z))
    f21 = gamma_ratio(num, (a + 0 * z, 1.0 - a + 0 * z))
    f22 = -gamma_ratio(num, (a - z, 1.0 - a + z))
    return _assemble(f11, f12, f21, f22)


def F_circ(params: StableParams, z) -> np.ndarray:
    """Matrix exponent of the Riesz-Bogdan-Zak transformed MAP on ``-alpha < Re z < 1``.

    With ``A(z) = Gamma(1 - z) Gamma(alpha + z)``::

        F11 = -A / (Gamma(1 - a - z) Gamma(a + z))
        F12 =  A / (Gamma(a) Gamma(1 - a))
        F21 =  A / (Gamma(a_hat) Gamma(1 - a_hat))
        F22 = -A / (Gamma(1 - a_hat - z) Gamma(a_hat + z))
    """
    z = _as_z(z)
    _check_strip(z, -params.alpha, 1.0, "F_circ")
    a, ah, al = params.arho, params.arho_hat, params.alpha
    num = (1.0 - z, al + z)
    f11 = -gamma_ratio(num, (1.0 - a - z, a + z))
    f12 = gamma_ratio(num, (a + 0 * z, 1.0 - a + 0 * z))
    f21 = gamma_ratio(num, (ah + 0 * z, 1.0 - ah + 0 * z))
    f22 = -gamma_ratio(num, (1.0 - ah - z, ah + z))
    return _assemble(f11, f12, f21, f22)


def F_hat(params: StableParams, z) -> np.ndarray:
    """Matrix exponent of the MAP of the dual process ``-X`` on ``-alpha < Re z < 1``.

    It is ``F_circ`` with ``rho`` and ``1 - rho`` exchanged, and satisfies the
    duality ``F_hat(z) = D^-1 F(-z)^T D`` with ``D = diag(pi)``.
    """
    return F_circ(params.swapped(), z)


def det_F(params: StableParams, z):
    """Closed-form determinant of ``F(z)``.

    ``Gamma(alpha - z)^2 Gamma(1 + z)^2 / pi^2 *
    {sin(pi(a - z)) sin(pi(a_hat - z)) - sin(pi a) sin(pi a_hat)}``,
    which vanishes at ``z = 0`` and ``z = alpha - 1``.
    """
    z = _as_z(z)
    _check_strip(z, -1.0, params.alpha, "det_F")
    a, ah = params.arho, params.arho_hat
    pref = det_prefactor(params, z)
    bracket = np.sin(np.pi * (a - z)) * np.sin(np.pi * (ah - z)) - math.sin(math.pi * a) * math.sin(math.pi * ah)
    out = pref * bracket
    return out[()] if np.ndim(out) == 0 else out


def det_prefactor(params: StableParams, z):
    """The gamma prefactor ``Gamma(alpha - z)^2 Gamma(1 + z)^2 / pi^2`` of :func:`det_F`."""
    z = _as_z(z)
    g = gamma_ratio((params.alpha - z, 1.0 + z), ())
    out = g * g / math.pi**2
    return out[()] if np.ndim(out) == 0 else out


def stationary_pi(params: StableParams) -> np.ndarray:
    """Stationary law of the modulating chain, ``pi`` proportional to ``(sin pi a, sin pi a_hat)``."""
    s, sh = params.sin_arho, params.sin_arho_hat
    return np.array([s, sh]) / (s + sh)


def conjugate_by(diag_vec, m: np.ndarray) -> np.ndarray:
    """``diag(d)^-1 m diag(d)`` for a stack of 2x2 matrices ``m``."""
    d = np.asarray(diag_vec, dtype=float)
    return m * d[None, :] / d[:, None]


def dual_transpose(params: StableParams, m: np.ndarray) -> np.ndarray:
    """``diag(pi)^-1 m^T diag(pi)``, the duality map between a MAP and its dual."""
    return conjugate_by(stationary_pi(params), np.swapaxes(m, -1, -2))


def leading_eig(params: StableParams, z: float) -> EigenPair:
    """Perron-Frobenius eigenvalue of ``F(z)`` for real ``z`` and its positive eigenvector.

    The 2x2 eigenproblem is solved through the trace and determinant.  The
    eigenvector is taken from whichever row of ``F - chi I`` has the larger
    norm, then normalised so that ``pi . v = 1``.

    Raises
    ------
    DomainError
        If ``z`` is complex or outside ``(-1, alpha)``.
    DegenerateError
        If the two eigenvalues are closer than ``1e-12`` times their size.
    """
    if np.iscomplexobj(z) and np.imag(z) != 0:
        raise DomainError("leading_eig needs a real argument")
    z = float(np.real(z))
    m = F(params, z).real
    tr = m[0, 0] + m[1, 1]
    half_gap_sq = 0.25 * (m[0, 0] - m[1, 1]) ** 2 + m[0, 1] * m[1, 0]
    half_gap = math.sqrt(max(half_gap_sq, 0.0))
    chi = 0.5 * tr + half_gap
    other = 0.5 * tr - half_gap
    if 2.0 * half_gap < 1e-12 * max(abs(chi), abs(other)):
        raise DegenerateError(f"eigenvalues of F({z}) coincide: {chi} and {other}")
    row1 = np.array([m[0, 1], chi - m[0, 0]])
    row2 = np.array([chi - m[1, 1], m[1, 0]])
    v = row1 if np.hypot(*row1) >= np.hypot(*row2) else row2
    v = v / float(stationary_pi(params) @ v)
    if np.any(v <= 0):
        raise DegenerateError(f"leading eigenvector of F({z}) is not positive: {v}")
    return EigenPair(chi=chi, v=v)


def esscher(params: StableParams, z, gamma: float) -> np.ndarray:
    """Esscher-transformed exponent ``diag(v)^-1 F(z + gamma) diag(v) - chi I``.

    ``(chi, v)`` is the leading eigenpair of ``F(gamma)``.  At
    ``gamma = alpha - 1`` this reproduces :func:`F_circ`.
    """
    z = _as_z(z)
    if not (-1.0 < gamma < params.alpha):
        raise DomainError(f"gamma = {gamma} must lie in (-1, {params.alpha})")
    _check_strip(z + gamma, -1.0, params.alpha, "esscher (z + gamma)")
    eig = leading_eig(params, gamma)
    out = conjugate_by(eig.v, F(params, z + gamma))
    out = out - eig.chi * np.eye(2)
    return out
