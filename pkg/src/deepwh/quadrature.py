"""Tanh-sinh quadrature on (0, 1) and, through ``u = exp(-x)``, on (0, inf).

The double-exponential node family clusters nodes at both endpoints fast
enough to absorb algebraic singularities ``u^(-e)`` with ``e < 1`` without
weight adjustments.  Nodes are generated together with their distance to
each endpoint, so integrands that depend on ``1 - u`` can be evaluated
without cancellation near ``u = 1``.

Integrands may be vector valued: the node axis is the first axis of the
returned array and any trailing axes are integrated independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .errors import DomainError, NoConvergence

# Beyond |t| = 6 the nodes come within 1e-275 of an endpoint; further nodes
# underflow.
_T_MAX = 6.0

# Endpoint exponents above this are removed by a power substitution first:
# for e near 1 a visible share of the mass sits below the smallest double.
_STRONG = 0.75
_TINY = 1e-300


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances for the adaptive quadrature.

    Attributes
    ----------
    rel_tol : float
        Relative tolerance on the result.
    abs_tol : float
        Absolute tolerance floor.
    max_levels : int
        Maximum number of step halvings before giving up.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_levels: int = 12

    def __post_init__(self) -> None:
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_levels < 4:
            raise DomainError("max_levels must be at least 4")


DEFAULT_QUAD = QuadConfig()


def _nodes(t: np.ndarray):
    """Node positions, complements and weights for the (0, 1) map at abscissae ``t``."""
    v = math.pi * np.sinh(t)
    u = expit(v)
    w = expit(-v)
    weight = math.pi * np.cosh(t) * u * w
    return u, w, weight


def _initial_level(left_exponent: float, right_exponent: float) -> int:
    worst = max(left_exponent, right_exponent)
    return 4 if worst > 0.75 else 3


def _weighted_sum(f, u, w, weight, complement):
    if complement:
        vals = np.asarray(f(u, w))
    else:
        # Without the complement, nodes that round onto an endpoint carry no
        # information and are dropped.
        keep = (u > 0.0) & (u < 1.0)
        weight = np.where(keep, weight, 0.0)
        vals = np.asarray(f(np.where(keep, u, 0.5)))
    if vals.shape[:1] != u.shape:
        vals = np.broadcast_to(vals, u.shape + vals.shape[1:])
    wshape = (-1,) + (1,) * (vals.ndim - 1)
    terms = weight.reshape(wshape) * vals
    if not np.all(np.isfinite(terms)):
        raise NoConvergence("integrand produced non-finite values at quadrature nodes")
    return terms.sum(axis=0), terms


def _outer_terms(terms: np.ndarray):
    """Magnitude of the outermost non-vanishing terms, used as a truncation estimate."""
    mags = np.abs(terms).reshape(terms.shape[0], -1).max(axis=1)
    nz = np.flatnonzero(mags)
    if nz.size == 0:
        return np.zeros(terms.shape[1:])
    return np.abs(terms[nz[0]]) + np.abs(terms[nz[-1]])


def integrate_01(
    f: Callable,
    left_exponent: float = 0.0,
    right_exponent: float = 0.0,
    cfg: QuadConfig = DEFAULT_QUAD,
    *,
    complement: bool = False,
    full_output: bool = False,
):
    """Integrate ``f`` over (0, 1).

    Parameters
    ----------
    f : callable
        Vectorised integrand.  Called as ``f(u)`` or, with ``complement=True``,
        as ``f(u, 1 - u)`` where the complement is computed without rounding
        loss.  Must return an array whose first axis matches ``u``.
    left_exponent, right_exponent : float
        Declared endpoint behaviour ``|f| = O(u^-left)`` and
        ``O((1-u)^-right)``; both must be below 1.
    cfg : QuadConfig
        Tolerances.
    complement : bool
        Pass ``1 - u`` as a second argument.
    full_output : bool
        Also return the error estimate and the final level.

    Returns
    -------
    value : float, complex or ndarray
        Integral (trailing integrand axes are kept).
    error, level : float, int
        Only with ``full_output``.

    Raises
    ------
    DomainError
        If a declared exponent is 1 or larger.
    NoConvergence
        If the tolerance is not met within ``cfg.max_levels`` halvings.
    """
    if left_exponent >= 1.0 or right_exponent >= 1.0:
        raise DomainError(
            f"non-integrable endpoint exponents ({left_exponent}, {right_exponent}); both must be < 1"
        )
    if max(left_exponent, right_exponent) > _STRONG:
        return _integrate_split(f, left_exponent, right_exponent, cfg, complement, full_output)
    level = _initial_level(left_exponent, right_exponent)
    h = 2.0**-level
    t = np.arange(-int(_T_MAX / h), int(_T_MAX / h) + 1) * h
    u, w, weight = _nodes(t)
    total, terms = _weighted_sum(f, u, w, weight, complement)
    estimate = h * total
    edge = _outer_terms(terms)
    err = np.inf
    for _ in range(level, cfg.max_levels):
        h *= 0.5
        k = np.arange(-int(_T_MAX / h) + 1, int(_T_MAX / h), 2)
        u, w, weight = _nodes(k * h)
        new_sum, _ = _weighted_sum(f, u, w, weight, complement)
        total = total + new_sum
        new_estimate = h * total
        diff = np.abs(new_estimate - estimate)
        # Endpoint truncation: contribution of the outermost retained terms.
        tail = h * edge
        err_arr = diff + tail
        tol_arr = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(new_estimate))
        estimate = new_estimate
        level += 1
        err = float(np.max(err_arr))
        if np.all(err_arr <= tol_arr):
            break
    else:
        raise NoConvergence(
            f"tanh-sinh quadrature did not reach rel_tol={cfg.rel_tol:g}, abs_tol={cfg.abs_tol:g} "
            f"within {cfg.max_levels} levels (error estimate {err:.3g})"
        )
    out = estimate[()] if np.ndim(estimate) == 0 else estimate
    if full_output:
        return out, err, level
    return out


def _integrate_split(f, left_exponent, right_exponent, cfg, complement, full_output):
    """Halves (0, 1/2) and (1/2, 1) with ``u = t^m / 2`` towards each endpoint.

    With ``m = 1 / (1 - e)`` the factor ``u^-e du`` becomes a constant times
    ``dt``.  The remaining smooth factor ``f u^e`` is evaluated at a point no
    closer than ``_TINY`` to the endpoint.
    """
    el, er = max(left_exponent, 0.0), max(right_exponent, 0.0)
    call = (lambda u, w: f(u, w)) if complement else (lambda u, w: f(u))

    def half(e, towards_left):
        m = 1.0 / (1.0 - e)
        jac = 2.0 ** (e - 1.0) * m

        def g(t, _):
            near = np.maximum(0.5 * t**m, _TINY)
            far = 1.0 - near
            u, w = (near, far) if towards_left else (far, near)
            vals = np.asarray(call(u, w))
            scale = (jac * near**e).reshape((-1,) + (1,) * (vals.ndim - 1))
            return vals * scale

        return integrate_01(g, 0.0, 0.0, cfg, complement=True, full_output=True)

    lv, le, ll = half(el, True)
    rv, re, rl = half(er, False)
    out = lv + rv
    if full_output:
        return out, le + re, max(ll, rl)
    return out


def integrate_0inf(
    f: Callable,
    origin_exponent: float = 0.0,
    decay_rate: float = 1.0,
    cfg: QuadConfig = DEFAULT_QUAD,
    *,
    full_output: bool = False,
):
    """Integrate ``f`` over (0, inf) through the substitution ``u = exp(-x)``.

    Parameters
    ----------
    f : callable
        Vectorised integrand of ``x``; first output axis matches ``x``.
    origin_exponent : float
        ``|f(x)| = O(x^-origin_exponent)`` as ``x -> 0``; must be below 1.
    decay_rate : float
        ``|f(x)| = O(exp(-decay_rate x))`` as ``x -> inf``; must be positive.
    cfg : QuadConfig
        Tolerances.

    Returns
    -------
    value : float, complex or ndarray
        See :func:`integrate_01`.
    """
    if not decay_rate > 0:
        raise DomainError("decay_rate must be positive")

    def g(u, w):
        x = np.where(u < 0.5, -np.log(u), -np.log1p(-np.minimum(w, 0.5)))
        vals = np.asarray(f(x))
        return vals / u.reshape((-1,) + (1,) * (vals.ndim - 1))

    return integrate_01(
        g,
        left_exponent=1.0 - decay_rate,
        right_exponent=origin_exponent,
        cfg=cfg,
        complement=True,
        full_output=full_output,
    )
