"""Complex log-gamma, gamma ratios and the Gauss hypergeometric function at -1.

Every matrix entry in the package is a ratio of four gamma functions, so the
accuracy of :func:`log_gamma` bounds everything downstream.  The
implementation is a Lanczos approximation (g = 7, nine terms) valid for
``Re z >= 1/2``; smaller real parts are shifted up with the recurrence
``log Gamma(z) = log Gamma(z + 1) - log z``, which preserves the principal
branch off the negative real axis.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, NoConvergence, PoleError

_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _is_nonpositive_integer(z: np.ndarray) -> np.ndarray:
    re = z.real
    return (z.imag == 0.0) & (re <= 0.0) & (re == np.round(re))


def _lanczos_log_gamma(z: np.ndarray) -> np.ndarray:
    """log Gamma(z) for Re z >= 1/2."""
    zm1 = z - 1.0
    series = np.full(z.shape, _LANCZOS_COEF[0], dtype=complex)
    for k in range(1, _LANCZOS_COEF.size):
        series = series + _LANCZOS_COEF[k] / (zm1 + k)
    t = zm1 + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm1 + 0.5) * np.log(t) - t + np.log(series)


def log_gamma(z):
    """Principal branch of the complex log-gamma function.

    Parameters
    ----------
    z : complex or array_like
        Argument(s); must avoid the non-positive integers.

    Returns
    -------
    complex or ndarray
        ``log Gamma(z)``, continuous in the plane cut along the negative real
        axis and real on the positive real axis.

    Raises
    ------
    PoleError
        If any argument is a non-positive integer.
    """
    arr = np.asarray(z, dtype=complex)
    if np.any(_is_nonpositive_integer(arr)):
        raise PoleError(f"log_gamma has a pole at {z!r}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("log_gamma requires finite arguments")
    zz = np.atleast_1d(arr).copy()
    shift = np.maximum(np.ceil(0.5 - zz.real), 0.0).astype(np.int64)
    correction = np.zeros(zz.shape, dtype=complex)
    for _ in range(int(shift.max(initial=0))):
        need = shift > 0
        correction[need] += np.log(zz[need])
        zz[need] += 1.0
        shift[need] -= 1
    out = _lanczos_log_gamma(zz) - correction
    return out.reshape(arr.shape)[()] if arr.ndim == 0 else out.reshape(arr.shape)


def gamma_ratio(numerator, denominator):
    """Product of gammas over product of gammas, with one exponentiation.

    Parameters
    ----------
    numerator, denominator : sequence of complex or array_like
        Arguments whose gamma functions are multiplied in the numerator and
        denominator.  Arrays broadcast against each other.

    Returns
    -------
    complex or ndarray
        ``prod Gamma(numerator) / prod Gamma(denominator)``.  Where a
        denominator argument sits at a pole the reciprocal gamma vanishes and
        the result is exactly zero.

    Raises
    ------
    PoleError
        If a numerator argument is a pole.
    """
    num = [np.asarray(a, dtype=complex) for a in numerator]
    den = [np.asarray(b, dtype=complex) for b in denominator]
    shape = np.broadcast_shapes(*(a.shape for a in num + den))
    total = np.zeros(shape, dtype=complex)
    for a in num:
        total = total + log_gamma(a)
    at_pole = np.zeros(shape, dtype=bool)
    for b in den:
        b = np.broadcast_to(b, shape)
        pole = _is_nonpositive_integer(b)
        at_pole |= pole
        safe = np.where(pole, 1.0, b)
        total = total - log_gamma(safe)
    out = np.where(at_pole, 0.0, np.exp(total))
    return out[()] if out.ndim == 0 else out


def gamma_reflection(z):
    """``Gamma(z) Gamma(1 - z)`` evaluated through :func:`log_gamma`.

    Equals ``pi / sin(pi z)``; computing it from log-gamma values makes the
    identity a genuine consistency check.

    Raises
    ------
    PoleError
        If ``z`` is an integer.
    """
    arr = np.asarray(z, dtype=complex)
    if np.any(_is_nonpositive_integer(arr) | _is_nonpositive_integer(1.0 - arr)):
        raise PoleError(f"gamma_reflection has a pole at {z!r}")
    out = np.exp(log_gamma(arr) + log_gamma(1.0 - arr))
    return out[()] if np.ndim(out) == 0 else out


def _terminating_order(x: float) -> int | None:
    if x <= 0 and float(x).is_integer():
        return int(-x)
    return None


def hyp2f1_neg1(a: float, b: float, c: float, *, tol: float = 1e-16, max_terms: int = 5000) -> float:
    """Gauss hypergeometric function ``2F1(a, b; c; -1)``.

    The Euler transformation ``2F1(a, b; c; -1) = 2^{-a} 2F1(a, c - b; c; 1/2)``
    maps the slowly convergent alternating series at -1 to a geometrically
    convergent one.  Polynomial cases (``a`` or ``b`` a non-positive integer)
    are summed directly.

    Parameters
    ----------
    a, b, c : float
        Real parameters; ``c`` must not be a non-positive integer.
    tol : float
        Relative size of the last retained term.
    max_terms : int
        Series length cap.

    Returns
    -------
    float

    Raises
    ------
    DomainError
        If ``c`` is a non-positive integer.
    NoConvergence
        If the transformed series has not settled within ``max_terms``.
    """
    a, b, c = float(a), float(b), float(c)
    if _terminating_order(c) is not None:
        raise DomainError(f"2F1 undefined for c = {c} (non-positive integer)")
    for top, other in ((a, b), (b, a)):
        order = _terminating_order(top)
        if order is not None:
            term, total = 1.0, 1.0
            for n in range(order):
                term *= (top + n) * (other + n) / ((c + n) * (n + 1)) * -1.0
                total += term
            return total
    term, total = 1.0, 1.0
    cb = c - b
    for n in range(max_terms):
        term *= (a + n) * (cb + n) / ((c + n) * (n + 1)) * 0.5
        total += term
        if abs(term) <= tol * abs(total) and n > 2:
            return 2.0 ** (-a) * total
    raise NoConvergence(f"2F1({a}, {b}; {c}; -1) series did not converge")
