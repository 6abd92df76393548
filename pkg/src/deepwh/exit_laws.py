"""Exit and entrance densities of stable processes and the limit laws of first passage of the ladder MAP.

Variables are named for what they measure: ``theta`` is an overshoot of
``X`` beyond the barrier, ``y`` an entrance point in ``(-1, 1)`` and ``u`` a
log-scale overshoot of the ladder height.  Nothing is converted silently
between these scales.

Limits (``x -> inf``, ``a -> inf``) are exposed as closed forms, and the
finite-parameter formulas are exposed separately so that convergence can be
tested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, RegimeError
from .quadrature import DEFAULT_QUAD, QuadConfig, integrate_0inf, integrate_01
from .special_fn import gamma_ratio, hyp2f1_neg1
from .stable_params import StableParams

_LAWS = {
    "ascending": "ascending",
    "big_alpha": "ascending",
    "dual": "dual",
    "small_alpha_dual": "dual",
}


def _require_big_alpha(params: StableParams, what: str) -> None:
    if params.regime != "big_alpha":
        raise RegimeError(f"{what} is defined for alpha in (1, 2); got alpha = {params.alpha}")


def _finish(out):
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def c_alpha(params: StableParams) -> float:
    """``c(alpha) = 2^{alpha-1} Gamma(2-alpha) / (Gamma(1-alpha rho_hat) Gamma(1-alpha rho))``."""
    g = gamma_ratio((2.0 - params.alpha,), (1.0 - params.arho_hat, 1.0 - params.arho))
    return float(2.0 ** (params.alpha - 1.0) * np.real(g))


# ----------------------------------------------------------------------------
# Two-sided exit from an interval
# ----------------------------------------------------------------------------


def rogozin_density(params: StableParams, x, theta, form: str = "symmetric"):
    """Density in ``theta`` of the overshoot ``X_{tau_1^+} - 1`` on exit of the interval through the top.

    Parameters
    ----------
    x : float
        Starting point: in (0, 1) for ``form="unit_interval"`` (interval
        (0, 1)), in (-1, 1) for ``form="symmetric"`` (interval (-1, 1)).
    theta : float or array_like
        Overshoot, strictly positive; the density blows up like
        ``theta^{-alpha rho}`` at 0.
    form : {"unit_interval", "symmetric"}

    Returns
    -------
    float or ndarray
        Defective density: it integrates to the probability of leaving
        through the top.

    Raises
    ------
    DomainError
        For ``x`` outside the interval, ``theta <= 0`` or an unknown form.
    """
    a, ah = params.arho, params.arho_hat
    th = np.asarray(theta, dtype=float)
    if np.any(~(th > 0)) or not np.all(np.isfinite(th)):
        raise DomainError("overshoot theta must be finite and > 0")
    pref = params.sin_arho / math.pi
    if form == "unit_interval":
        if not 0.0 < x < 1.0:
            raise DomainError(f"x = {x} must lie in (0, 1)")
        out = pref * (1 - x) ** a * x**ah * th ** (-a) * (th + 1.0) ** (-ah) / (th + 1.0 - x)
    elif form == "symmetric":
        if not -1.0 < x < 1.0:
            raise DomainError(f"x = {x} must lie in (-1, 1)")
        out = pref * (1 - x) ** a * (1 + x) ** ah * th ** (-a) * (th + 2.0) ** (-ah) / (th + 1.0 - x)
    else:
        raise DomainError(f"form must be 'unit_interval' or 'symmetric', got {form!r}")
    return _finish(out)


def _rogozin_t(params: StableParams, x: float):
    """Symmetric-form density after ``theta = t / (1 - t)``, including the Jacobian."""
    a, ah = params.arho, params.arho_hat
    pref = params.sin_arho / math.pi * (1 - x) ** a * (1 + x) ** ah

    def f(t, w):
        # theta = t/w, theta + 2 = (1 + w)/w, theta + 1 - x = (1 - x w)/w, d theta = dt / w^2
        return pref * t ** (-a) * w ** (a + ah + 1.0 - 2.0) * (1.0 + w) ** (-ah) / (1.0 - x * w)

    return f


def exit_probability(params: StableParams, x: float, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """``P_x(tau_1^+ < tau_{-1}^-)``: mass of the symmetric Rogozin density, by quadrature.

    Raises
    ------
    DomainError
        If ``x`` is outside (-1, 1).
    """
    if not -1.0 < x < 1.0:
        raise DomainError(f"x = {x} must lie in (-1, 1)")
    f = _rogozin_t(params, x)
    right = max(0.0, 1.0 - params.alpha)
    return float(integrate_01(f, params.arho, right, cfg, complement=True))


# ----------------------------------------------------------------------------
# Entrance into an interval from outside (alpha in (1, 2))
# ----------------------------------------------------------------------------


def kpw_integral(params: StableParams, x: float, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """``int_1^x (t-1)^{alpha rho - 1} (t+1)^{alpha rho_hat - 1} dt`` for ``x >= 1``.

    Evaluated as ``2^{alpha-1} W^{alpha rho} int_0^1 v^{alpha rho - 1} (1 - W v)^{-alpha} dv``
    with ``W = (x-1)/(x+1)``; ``1 - W v`` is formed from ``1 - W = 2/(x+1)``
    so that it keeps full precision for large ``x``.
    """
    if not x >= 1.0:
        raise DomainError(f"x = {x} must be >= 1")
    if x == 1.0:
        return 0.0
    a, al = params.arho, params.alpha
    big_w = (x - 1.0) / (x + 1.0)
    one_minus_w = 2.0 / (x + 1.0)

    def f(v, wv):
        return v ** (a - 1.0) * (one_minus_w + big_w * wv) ** (-al)

    # The near-singularity at v = 1 has width 1 - W; it is integrable for any x.
    right = min(max(0.0, al - 1.0), 0.999)
    val = integrate_01(f, 1.0 - a, right, cfg, complement=True)
    return float(2.0 ** (al - 1.0) * big_w**a * val)


def kpw_interval_density(params: StableParams, x: float, y, cfg: QuadConfig = DEFAULT_QUAD):
    """Density in ``y`` of the first entrance point into (-1, 1) of the dual process started at ``x > 1``.

    Two-term form::

        s/pi (x+1)^{a_hat} (x-1)^a (1+y)^{-a_hat} (1-y)^{-a} / (x - y)
          - (alpha - 1) s/pi (1+y)^{-a_hat} (1-y)^{-a} int_1^x (t-1)^{a-1} (t+1)^{a_hat-1} dt

    with ``s = sin(pi alpha rho)``.  The two terms grow like ``x^{alpha-1}``
    and cancel, so roughly ``(alpha - 1) log10 x`` digits are lost.

    Raises
    ------
    RegimeError
        Unless ``alpha`` is in (1, 2).
    DomainError
        If ``x <= 1`` or ``|y| >= 1``.
    """
    _require_big_alpha(params, "kpw_interval_density")
    if not x > 1.0:
        raise DomainError(f"start point x = {x} must exceed 1")
    yy = np.asarray(y, dtype=float)
    if np.any(np.abs(yy) >= 1.0):
        raise DomainError("entrance point y must lie in (-1, 1)")
    a, ah, al = params.arho, params.arho_hat, params.alpha
    shape = (1.0 + yy) ** (-ah) * (1.0 - yy) ** (-a)
    pref = params.sin_arho / math.pi
    first = (x + 1.0) ** ah * (x - 1.0) ** a / (x - yy)
    second = (al - 1.0) * kpw_integral(params, x, cfg)
    return _finish(pref * shape * (first - second))


def p_hat_inf(params: StableParams, y):
    """Limit entrance density ``c(alpha) (1+y)^{-alpha rho_hat} (1-y)^{-alpha rho}`` from far away.

    Raises
    ------
    RegimeError
        Unless ``alpha`` is in (1, 2).
    DomainError
        If ``|y| >= 1``.
    """
    _require_big_alpha(params, "p_hat_inf")
    yy = np.asarray(y, dtype=float)
    if np.any(np.abs(yy) >= 1.0):
        raise DomainError("entrance point y must lie in (-1, 1)")
    return _finish(c_alpha(params) * (1.0 + yy) ** (-params.arho_hat) * (1.0 - yy) ** (-params.arho))


def p_hat_inf_mass(params: StableParams, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """``int_{-1}^1 p_hat_inf(y) dy`` by quadrature in ``y = 2u - 1``; equals 1."""
    _require_big_alpha(params, "p_hat_inf_mass")
    a, ah, c = params.arho, params.arho_hat, c_alpha(params)

    def f(u, w):
        return 2.0 * c * (2.0 * u) ** (-ah) * (2.0 * w) ** (-a)

    return float(integrate_01(f, ah, a, cfg, complement=True))


def beta_hat(params: StableParams, theta):
    """``alpha rho (1-theta)^{-alpha rho - 1} (1+theta)^{-alpha rho_hat} - (alpha-1)/2 (1-theta)^{-alpha rho} (1+theta)^{-alpha rho_hat}``.

    Raises
    ------
    RegimeError
        Unless ``alpha`` is in (1, 2).
    DomainError
        At or beyond ``theta = +-1``.
    """
    _require_big_alpha(params, "beta_hat")
    th = np.asarray(theta, dtype=float)
    if np.any(np.abs(th) >= 1.0):
        raise DomainError("beta_hat is singular at theta = +-1")
    a, ah, al = params.arho, params.arho_hat, params.alpha
    common = (1.0 - th) ** (-a) * (1.0 + th) ** (-ah)
    return _finish(common * (a / (1.0 - th) - 0.5 * (al - 1.0)))


# ----------------------------------------------------------------------------
# Cramer-type limits for the ladder MAP
# ----------------------------------------------------------------------------


def _law(regime: str) -> str:
    try:
        return _LAWS[regime]
    except KeyError:
        raise DomainError(f"unknown regime {regime!r}; use one of {sorted(_LAWS)}") from None


def _check_state(i: int) -> None:
    if i not in (1, 2):
        raise DomainError(f"state must be 1 or 2, got {i!r}")


def passage_is_certain(params: StableParams, regime: str) -> bool:
    """Whether the ladder process of the given law reaches every level with probability one.

    The ascending ladder of the MAP is unkilled for ``alpha <= 1``; the
    ascending ladder of its dual is unkilled for ``alpha >= 1``.
    """
    law = _law(regime)
    if law == "ascending":
        return params.alpha <= 1.0
    return params.alpha >= 1.0


def cramer_constant(params: StableParams, i: int, regime: str) -> float:
    """Limit of ``e^{|alpha-1| a} P_{0,i}(T_a < inf)`` for a killed ladder process.

    Parameters
    ----------
    i : {1, 2}
        Initial state of the modulating chain.
    regime : {"big_alpha", "small_alpha_dual"}
        ``"big_alpha"`` (alias ``"ascending"``) is the MAP itself with
        ``alpha`` in (1, 2); ``"small_alpha_dual"`` (alias ``"dual"``) is the
        dual MAP with ``alpha`` in (0, 1).

    Raises
    ------
    RegimeError
        If the ladder process is not killed for this ``alpha``: passage is then
        certain (see :func:`passage_is_certain`) and no decay constant exists.
    """
    _check_state(i)
    law = _law(regime)
    if passage_is_certain(params, law):
        raise RegimeError(
            f"first passage is certain for the {law} ladder at alpha = {params.alpha}; "
            "the probability is 1 and there is no exponential decay"
        )
    weight = math.pi / (params.sin_arho if i == 1 else params.sin_arho_hat)
    if law == "ascending":
        return c_alpha(params) * weight
    g = gamma_ratio((), (params.arho, params.arho_hat, 2.0 - params.alpha))
    return float(2.0 ** (1.0 - params.alpha) * np.real(g) * weight)


def cramer_overshoot_density(params: StableParams, u, j: int, regime: str = "ascending"):
    """Limit density of ``(H^+(T_a) - a, J^+(T_a) = j)`` given ``T_a < inf``, as ``a -> inf``.

    Parameters
    ----------
    u : float or array_like
        Log-scale overshoot, ``u > 0``.
    j : {1, 2}
        Modulating state at passage.
    regime : {"ascending", "dual"}
        Ladder of the MAP (aliases ``"big_alpha"``) or of its dual (alias
        ``"small_alpha_dual"``).  Both laws hold for every ``alpha`` in (0, 2).

    Returns
    -------
    float or ndarray
        Sub-probability density in ``u``; the two ``j`` branches together
        have mass one.
    """
    _check_state(j)
    law = _law(regime)
    uu = np.asarray(u, dtype=float)
    if np.any(~(uu > 0)) or not np.all(np.isfinite(uu)):
        raise DomainError("log overshoot u must be finite and > 0")
    a, ah, al = params.arho, params.arho_hat, params.alpha
    e = np.exp(-uu)
    one_minus = -np.expm1(-uu)
    if law == "ascending":
        if j == 1:
            out = params.sin_arho / math.pi * np.exp(-al * uu) * (1.0 + e) ** (-ah) * one_minus ** (-a)
        else:
            out = params.sin_arho_hat / math.pi * np.exp(-al * uu) * (1.0 + e) ** (-a) * one_minus ** (-ah)
    else:
        c = c_alpha(params)
        if j == 1:
            out = c * e * (1.0 + e) ** (-a) * one_minus ** (-ah)
        else:
            out = c * e * (1.0 + e) ** (-ah) * one_minus ** (-a)
    return _finish(out)


def overshoot_branch_mass(params: StableParams, j: int, regime: str = "ascending", cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Total mass of one ``j`` branch of :func:`cramer_overshoot_density`, by quadrature."""
    _check_state(j)
    law = _law(regime)
    a, ah = params.arho, params.arho_hat
    singular = (a if j == 1 else ah) if law == "ascending" else (ah if j == 1 else a)
    decay = params.alpha if law == "ascending" else 1.0
    return float(integrate_0inf(lambda u: cramer_overshoot_density(params, u, j, law), singular, decay, cfg))


@dataclass(frozen=True)
class EscapeAsymptote:
    """Small-``x`` behaviour of the probability of leaving (-1, 1) before hitting 0.

    ``s(x) |x|^{1-alpha} P_x(escape before 0) -> limit`` as ``x -> 0``.
    """

    limit: float
    weight: float

    def probability(self, x: float, alpha: float) -> float:
        """Leading-order approximation ``limit |x|^{alpha-1} / s(x)``."""
        return self.limit * abs(x) ** (alpha - 1.0) / self.weight


def escape_asymptote(params: StableParams, x: float) -> EscapeAsymptote:
    """Limit constant ``c(alpha)`` together with the side weight ``s(x)``.

    ``s(x) = sin(pi alpha rho)/pi`` for ``x > 0`` and ``sin(pi alpha rho_hat)/pi`` for ``x < 0``.

    Raises
    ------
    RegimeError
        Unless ``alpha`` is in (1, 2).
    DomainError
        If ``x == 0``.
    """
    _require_big_alpha(params, "escape_asymptote")
    if x == 0 or not math.isfinite(x):
        raise DomainError("x must be finite and non-zero")
    weight = (params.sin_arho if x > 0 else params.sin_arho_hat) / math.pi
    return EscapeAsymptote(limit=c_alpha(params), weight=weight)


def first_passage_density_origin(params: StableParams, x: float, theta, cfg: QuadConfig = DEFAULT_QUAD):
    """Density in ``theta`` of the overshoot above 1 on exit of (-1, 1) before hitting the origin.

    Equals the symmetric Rogozin density minus::

        (alpha - 1) s/pi (2+theta)^{-a_hat} theta^{-a} (1+theta)^{-1} x^{alpha-1}
            int_1^{1/x} (t-1)^{a-1} (t+1)^{a_hat-1} dt.

    Raises
    ------
    RegimeError
        Unless ``alpha`` is in (1, 2).
    DomainError
        If ``x`` is outside (0, 1) or ``theta <= 0``.
    """
    _require_big_alpha(params, "first_passage_density_origin")
    if not 0.0 < x < 1.0:
        raise DomainError(f"x = {x} must lie in (0, 1)")
    th = np.asarray(theta, dtype=float)
    lead = rogozin_density(params, x, th, form="symmetric")
    a, ah, al = params.arho, params.arho_hat, params.alpha
    corr = (
        (al - 1.0)
        * params.sin_arho
        / math.pi
        * (2.0 + th) ** (-ah)
        * th ** (-a)
        / (1.0 + th)
        * x ** (al - 1.0)
        * kpw_integral(params, 1.0 / x, cfg)
    )
    return _finish(lead - corr)


# ----------------------------------------------------------------------------
# Hypergeometric identities
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityTerms:
    """Both sides of an identity and its intermediate integrals in two evaluations.

    ``integrals`` holds the quadrature values, ``closed_forms`` the matching
    gamma/2F1 expressions.
    """

    lhs: float
    rhs: float
    integrals: tuple
    closed_forms: tuple


def _big_alpha_terms(params: StableParams, cfg: QuadConfig) -> IdentityTerms:
    a, ah, al = params.arho, params.arho_hat, params.alpha

    def weight_integral(p, q):
        # int_0^1 y^{alpha-1} (1+y)^{-p} (1-y)^{-q} dy
        return float(integrate_01(lambda y, w: y ** (al - 1.0) * (1.0 + y) ** (-p) * w ** (-q), 1.0 - al, q, cfg, complement=True))

    i1 = weight_integral(ah, a)
    i2 = weight_integral(a, ah)
    f1 = float(np.real(gamma_ratio((al, 1.0 - a), (1.0 + ah,)))) * hyp2f1_neg1(ah, al, ah + 1.0)
    f2 = float(np.real(gamma_ratio((al, 1.0 - ah), (1.0 + a,)))) * hyp2f1_neg1(a, al, a + 1.0)
    lhs = params.sin_arho * i1 + params.sin_arho_hat * i2
    return IdentityTerms(lhs=lhs, rhs=math.pi, integrals=(i1, i2), closed_forms=(f1, f2))


def _small_alpha_terms(params: StableParams, cfg: QuadConfig) -> IdentityTerms:
    a, ah, al = params.arho, params.arho_hat, params.alpha

    def exp_integral(p, q):
        # int_0^inf e^{(alpha-1)u} (e^u - 1)^{-p} (e^u + 1)^{-q} du, rewritten with e^{-u}
        def f(u):
            e = np.exp(-u)
            return e * (-np.expm1(-u)) ** (-p) * (1.0 + e) ** (-q)

        return float(integrate_0inf(f, p, 1.0, cfg))

    k1 = exp_integral(ah, a)
    k2 = exp_integral(a, ah)
    f1 = hyp2f1_neg1(1.0, a, 2.0 - ah) / (1.0 - ah)
    f2 = hyp2f1_neg1(1.0, ah, 2.0 - a) / (1.0 - a)
    lhs = params.sin_arho * params.sin_arho_hat / math.pi * (k1 + k2)
    rhs = 2.0 ** (1.0 - al) * math.pi * float(np.real(gamma_ratio((), (a, ah, 2.0 - al))))
    return IdentityTerms(lhs=lhs, rhs=rhs, integrals=(k1, k2), closed_forms=(f1, f2))


def hypergeometric_terms(params: StableParams, which: str, cfg: QuadConfig = DEFAULT_QUAD) -> IdentityTerms:
    """Full breakdown of :func:`hypergeometric_identity_check`."""
    if which == "big_alpha":
        _require_big_alpha(params, "the big_alpha identity")
        return _big_alpha_terms(params, cfg)
    if which == "small_alpha":
        if not params.alpha < 1.0:
            raise RegimeError(f"the small_alpha identity needs alpha in (0, 1); got {params.alpha}")
        return _small_alpha_terms(params, cfg)
    raise DomainError(f"which must be 'big_alpha' or 'small_alpha', got {which!r}")


def hypergeometric_identity_check(params: StableParams, which: str, cfg: QuadConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """Both sides of the identity behind a Cramer constant.

    ``"big_alpha"``: ``sin(pi a) int_0^1 y^{alpha-1} (1+y)^{-a_hat} (1-y)^{-a} dy``
    plus the mirror term equals ``pi``.

    ``"small_alpha"``: ``sin(pi a) sin(pi a_hat)/pi`` times the sum of
    ``int_0^inf e^{(alpha-1)u} (e^u-1)^{-a_hat} (e^u+1)^{-a} du`` and its
    mirror equals ``2^{1-alpha} pi / (Gamma(a) Gamma(a_hat) Gamma(2-alpha))``.

    Returns
    -------
    (lhs, rhs) : tuple of float
    """
    terms = hypergeometric_terms(params, which, cfg)
    return terms.lhs, terms.rhs


# ----------------------------------------------------------------------------
# Distribution functions for goodness-of-fit tests
# ----------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_SPAN = 0.5


def cumulative_mass(
    pdf: Callable[[np.ndarray], np.ndarray],
    points,
    origin_exponent: float,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> np.ndarray:
    """``int_0^p pdf`` at each non-negative point ``p``.

    The first interval, which carries the ``t^{-origin_exponent}`` singularity,
    is integrated by tanh-sinh; consecutive sorted points are then joined
    with 8-point Gauss-Legendre panels in ``log t``.

    Parameters
    ----------
    pdf : callable
        Vectorised density on ``(0, inf)``.
    points : array_like
        Non-negative evaluation points, in any order; zeros map to 0.
    origin_exponent : float
        Order of the singularity of ``pdf`` at 0 (below 1).
    """
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size == 0:
        return pts.copy()
    if np.any(~(pts >= 0)) or not np.all(np.isfinite(pts)):
        raise DomainError("cumulative_mass needs finite non-negative points")
    positive = pts > 0
    if not np.all(positive):
        out = np.zeros_like(pts)
        out[positive] = cumulative_mass(pdf, pts[positive], origin_exponent, cfg)
        return out
    order = np.argsort(pts, kind="stable")
    srt = pts[order]
    p0 = srt[0]
    head = float(integrate_01(lambda v: p0 * pdf(p0 * v), origin_exponent, 0.0, cfg))
    # Gaps are cut into panels at most _GL_SPAN wide in log t.
    logs = np.log(srt)
    counts = np.maximum(1, np.ceil(np.diff(logs) / _GL_SPAN).astype(int))
    owner = np.repeat(np.arange(counts.size), counts)
    frac = (np.arange(owner.size) - np.repeat(np.cumsum(counts) - counts, counts)) / counts[owner]
    width = np.diff(logs)[owner] / counts[owner]
    lo = logs[owner] + frac * np.diff(logs)[owner]
    mid, half = lo + 0.5 * width, 0.5 * width
    s = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    t = np.exp(s)
    panels = half * ((pdf(t.ravel()).reshape(t.shape) * t) @ _GL_WEIGHTS)
    pieces = np.bincount(owner, weights=panels, minlength=counts.size)
    cum = np.concatenate(([head], head + np.cumsum(pieces)))
    out = np.empty_like(cum)
    out[order] = cum
    return out


def rogozin_conditional_cdf(params: StableParams, x: float, cfg: QuadConfig = DEFAULT_QUAD) -> Callable:
    """CDF of the overshoot above 1 given exit through the top of (-1, 1) from ``x``."""
    total = exit_probability(params, x, cfg)

    def cdf(theta):
        th = np.asarray(theta, dtype=float)
        vals = cumulative_mass(lambda t: rogozin_density(params, x, t), th, params.arho, cfg)
        return np.clip(vals / total, 0.0, 1.0).reshape(th.shape)

    return cdf


def cramer_conditional_cdf(params: StableParams, j: int, regime: str = "ascending", cfg: QuadConfig = DEFAULT_QUAD) -> Callable:
    """CDF of the limiting log overshoot given passage in state ``j``."""
    law = _law(regime)
    total = overshoot_branch_mass(params, j, law, cfg)
    a, ah = params.arho, params.arho_hat
    singular = (a if j == 1 else ah) if law == "ascending" else (ah if j == 1 else a)

    def cdf(u):
        uu = np.asarray(u, dtype=float)
        vals = cumulative_mass(lambda t: cramer_overshoot_density(params, t, j, law), uu, singular, cfg)
        return np.clip(vals / total, 0.0, 1.0).reshape(uu.shape)

    return cdf
