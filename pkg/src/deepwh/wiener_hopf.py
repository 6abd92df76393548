"""Ladder matrix exponents of the Lamperti-stable MAP and checks of the matrix Wiener-Hopf factorisation.

The factorisation reads ``-F(i theta) = c * D^-1 kappa_hat(i theta)^T D kappa(-i theta)``
with ``D = diag(pi)`` and an unspecified constant ``c``.  The ladder exponents
are assembled from the Bernstein families of :mod:`deepwh.bernstein_factors`:
the kappa family when ``alpha <= 1`` and the phi family when ``alpha > 1``.

Two assemblies are offered through ``form``:

``"renewal"`` (default)
    Constant terms are the total masses ``M`` of the finite-mass Levy
    densities and off-diagonal terms are their Laplace transforms
    ``L(s) = M - f(s)``.  With this form the factorisation holds to
    quadrature accuracy.
``"display"``
    Constant terms are the mean values ``f'(0+)`` and off-diagonal terms are
    ``f(s)/s``.  Kept for comparison; it does not satisfy the factorisation.

Index sets are named as in :func:`deepwh.bernstein_factors.standard_indices`;
``s`` and ``s_hat`` denote ``sin(pi alpha rho)`` and ``sin(pi alpha rho_hat)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bernstein_factors import (
    kappa_qp,
    kappa_qp_deriv0,
    kappa_qp_laplace,
    kappa_qp_mass,
    phi_qp,
    phi_qp_deriv0,
    phi_qp_laplace,
    phi_qp_mass,
    standard_indices,
)
from .errors import DegenerateError, DomainError
from .map_exponent import F, conjugate_by, dual_transpose, leading_eig
from .quadrature import DEFAULT_QUAD, QuadConfig
from .stable_params import StableParams

FORMS = ("renewal", "display")
KINDS = ("ascending", "dual_ascending", "circ_ascending")

_FAMILY = {
    "kappa": (kappa_qp, kappa_qp_deriv0, kappa_qp_laplace, kappa_qp_mass),
    "phi": (phi_qp, phi_qp_deriv0, phi_qp_laplace, phi_qp_mass),
}


@dataclass(frozen=True)
class _Blocks:
    """Bernstein pieces at one argument array: diagonal functions and jump terms."""

    f_a: np.ndarray
    f_c: np.ndarray
    off_b: np.ndarray
    off_d: np.ndarray
    const_b: float
    const_d: float


def _blocks(params: StableParams, family: str, arg: np.ndarray, form: str, cfg: QuadConfig) -> _Blocks:
    fn, deriv0, laplace, mass = _FAMILY[family]
    idx = standard_indices(params)
    f_a = fn(params, idx["A"], arg, cfg)
    f_c = fn(params, idx["C"], arg, cfg)
    if form == "renewal":
        return _Blocks(
            f_a,
            f_c,
            laplace(params, idx["B"], arg, cfg),
            laplace(params, idx["D"], arg, cfg),
            mass(params, idx["B"], cfg),
            mass(params, idx["D"], cfg),
        )
    d_b, d_d = deriv0(params, idx["B"], cfg), deriv0(params, idx["D"], cfg)
    zero = arg == 0
    safe = np.where(zero, 1.0, arg)
    off_b = np.where(zero, d_b, fn(params, idx["B"], safe, cfg) / safe)
    off_d = np.where(zero, d_d, fn(params, idx["D"], safe, cfg) / safe)
    return _Blocks(f_a, f_c, off_b, off_d, d_b, d_d)


def _matrix(m11, m12, m21, m22) -> np.ndarray:
    m11, m12, m21, m22 = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (m11, m12, m21, m22)))
    out = np.empty(m11.shape + (2, 2), dtype=complex)
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = m11, m12, m21, m22
    return out


def _check_form(form: str) -> None:
    if form not in FORMS:
        raise DomainError(f"form must be one of {FORMS}, got {form!r}")


def _ascending(params: StableParams, s: np.ndarray, form: str, cfg: QuadConfig) -> np.ndarray:
    sn, sh = params.sin_arho, params.sin_arho_hat
    if params.regime == "small_alpha":
        b = _blocks(params, "kappa", s, form, cfg)
        return _matrix(
            b.f_a + sh / sn * b.const_b,
            -sh / sn * b.off_b,
            -sn / sh * b.off_d,
            b.f_c + sn / sh * b.const_d,
        )
    b = _blocks(params, "phi", s + params.alpha - 1.0, form, cfg)
    return _matrix(
        sn * (b.f_a + b.const_b),
        -sh * b.off_b,
        -sn * b.off_d,
        sh * (b.f_c + b.const_d),
    )


def _dual_ascending(params: StableParams, s: np.ndarray, form: str, cfg: QuadConfig) -> np.ndarray:
    sn, sh = params.sin_arho, params.sin_arho_hat
    if params.regime == "small_alpha":
        b = _blocks(params, "kappa", s + 1.0 - params.alpha, form, cfg)
        return _matrix(
            b.f_c + sn / sh * b.const_d,
            -b.off_d,
            -b.off_b,
            b.f_a + sh / sn * b.const_b,
        )
    b = _blocks(params, "phi", s, form, cfg)
    return _matrix(
        sh * (b.f_c + b.const_d),
        -sh * b.off_d,
        -sn * b.off_b,
        sn * (b.f_a + b.const_b),
    )


def _circ_ascending(params: StableParams, s: np.ndarray, form: str, cfg: QuadConfig) -> np.ndarray:
    if params.regime == "small_alpha":
        return _dual_ascending(params.swapped(), s, form, cfg)
    sn, sh = params.sin_arho, params.sin_arho_hat
    b = _blocks(params, "phi", s, form, cfg)
    return _matrix(
        sn * (b.f_a + b.const_b),
        -sn * b.off_b,
        -sh * b.off_d,
        sh * (b.f_c + b.const_d),
    )


_BUILDERS = {
    "ascending": _ascending,
    "dual_ascending": _dual_ascending,
    "circ_ascending": _circ_ascending,
}


def _lower_bound(params: StableParams, kind: str) -> float:
    """Infimum of admissible ``Re s`` for each evaluator."""
    return -params.alpha if kind == "ascending" else -1.0


@dataclass(frozen=True)
class LadderFactor:
    """Evaluator for one ladder matrix exponent.

    Attributes
    ----------
    params : StableParams
    kind : {"ascending", "dual_ascending", "circ_ascending"}
        ``kappa``, ``kappa_hat`` or ``kappa_circ`` (the ladder exponent of the
        Riesz-Bogdan-Zak transformed process).
    form : {"renewal", "display"}
        See the module docstring.
    cfg : QuadConfig
        Quadrature tolerances for the underlying Bernstein integrals.
    """

    params: StableParams
    kind: str = "ascending"
    form: str = "renewal"
    cfg: QuadConfig = field(default=DEFAULT_QUAD)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}, got {self.kind!r}")
        _check_form(self.form)

    @property
    def regime(self) -> str:
        return self.params.regime

    def __call__(self, s) -> np.ndarray:
        """Matrix value(s) at ``s``; shape ``np.shape(s) + (2, 2)``.

        Raises
        ------
        DomainError
            If ``Re s`` is outside the convergence region of the defining integrals.
        """
        arr = np.asarray(s, dtype=complex)
        lo = _lower_bound(self.params, self.kind)
        if np.any(arr.real <= lo):
            raise DomainError(f"{self.kind} ladder exponent needs Re s > {lo:g}")
        flat = np.atleast_1d(arr).ravel()
        out = _BUILDERS[self.kind](self.params, flat, self.form, self.cfg)
        out = out.reshape(arr.shape + (2, 2))
        if np.all(out.imag == 0):
            out = out.real
        return out


def kappa_matrix(params: StableParams, s, *, form: str = "renewal", cfg: QuadConfig = DEFAULT_QUAD) -> np.ndarray:
    """Ascending ladder matrix exponent ``kappa(s)``."""
    return LadderFactor(params, "ascending", form, cfg)(s)


def kappa_hat_matrix(params: StableParams, s, *, form: str = "renewal", cfg: QuadConfig = DEFAULT_QUAD) -> np.ndarray:
    """Ascending ladder matrix exponent ``kappa_hat(s)`` of the dual MAP."""
    return LadderFactor(params, "dual_ascending", form, cfg)(s)


def circ_weights(params: StableParams) -> np.ndarray:
    """Stationary law ``pi_circ`` of the transformed chain, taken as the eigenvector ``v(alpha - 1)``."""
    return leading_eig(params, params.alpha - 1.0).v


def kappa_circ_matrix(
    params: StableParams,
    s,
    *,
    route: str = "direct",
    form: str = "renewal",
    cfg: QuadConfig = DEFAULT_QUAD,
) -> np.ndarray:
    """Ascending ladder matrix exponent ``kappa_circ(s)`` of the transformed process.

    Parameters
    ----------
    route : {"direct", "shift"}
        ``"direct"`` assembles the matrix from Bernstein functions at ``s``
        (for ``alpha <= 1`` it is ``kappa_hat`` with ``rho`` and ``rho_hat``
        exchanged).  ``"shift"`` uses
        ``D^-1 kappa(s - (alpha - 1)) D`` with ``D = diag(v(alpha - 1))``.
    """
    if route == "direct":
        return LadderFactor(params, "circ_ascending", form, cfg)(s)
    if route == "shift":
        arr = np.asarray(s, dtype=complex)
        shifted = kappa_matrix(params, arr - (params.alpha - 1.0), form=form, cfg=cfg)
        w = circ_weights(params)
        return conjugate_by(w, shifted)
    raise DomainError(f"route must be 'direct' or 'shift', got {route!r}")


@dataclass(frozen=True)
class LadderComponents:
    """Decomposition ``kappa(lam) = diag(Phi) - Lambda o K(lam)`` on a real grid.

    Attributes
    ----------
    lam : ndarray, shape (n,)
    phi : ndarray, shape (n, 2)
        ``Phi_i(lam)``.  ``Phi_i(0)`` equals the killing rate of state ``i``.
    rates : ndarray, shape (2, 2)
        Switching rates ``Lambda`` with a zero diagonal.
    k : ndarray, shape (n, 2, 2)
        Normalised switching transforms ``K(lam)`` with unit diagonal
        placeholders; off-diagonals equal 1 at ``lam = 0``.
    """

    lam: np.ndarray
    phi: np.ndarray
    rates: np.ndarray
    k: np.ndarray


def ladder_components(factor: LadderFactor, lambda_grid) -> LadderComponents:
    """Split a ladder matrix into state exponents, switching rates and switching transforms.

    ``Lambda_ij = -kappa_ij(0)``, ``K_ij(lam) = -kappa_ij(lam) / Lambda_ij`` and
    ``Phi_i(lam) = kappa_ii(lam) - Lambda_ij``.

    Raises
    ------
    DomainError
        If the grid contains negative values.
    DegenerateError
        If a switching rate vanishes.
    """
    lam = np.asarray(lambda_grid, dtype=float).ravel()
    if lam.size == 0 or np.any(lam < 0):
        raise DomainError("ladder_components needs a non-empty grid with lam >= 0")
    at0 = np.real(factor(0.0))
    rates = np.array([[0.0, -at0[0, 1]], [-at0[1, 0], 0.0]])
    if rates[0, 1] == 0 or rates[1, 0] == 0:
        raise DegenerateError(f"vanishing switching rate in {factor.kind} ladder exponent: {rates}")
    vals = np.real(factor(lam))
    phi = np.stack([vals[:, 0, 0] - rates[0, 1], vals[:, 1, 1] - rates[1, 0]], axis=1)
    k = np.ones_like(vals)
    k[:, 0, 1] = -vals[:, 0, 1] / rates[0, 1]
    k[:, 1, 0] = -vals[:, 1, 0] / rates[1, 0]
    return LadderComponents(lam=lam, phi=phi, rates=rates, k=k)


@dataclass(frozen=True)
class FactorReport:
    """Outcome of a factorisation check.

    Attributes
    ----------
    fitted_constant : complex
        ``c* = L(theta_0)_11 / R(theta_0)_11``.
    max_rel_residual : float
        ``max |L - c* R| / |L|`` over the grid and entries.
    theta_grid : list of float
    residuals : ndarray, shape (n,)
        Per-theta maximum relative residual.
    """

    fitted_constant: complex
    max_rel_residual: float
    theta_grid: list
    residuals: np.ndarray


def factorisation_product(
    params: StableParams, theta, *, form: str = "renewal", cfg: QuadConfig = DEFAULT_QUAD
) -> np.ndarray:
    """``R(theta) = D^-1 kappa_hat(i theta)^T D kappa(-i theta)`` with ``D = diag(pi)``."""
    th = np.asarray(theta, dtype=float)
    kh = kappa_hat_matrix(params, 1j * th, form=form, cfg=cfg)
    k = kappa_matrix(params, -1j * th, form=form, cfg=cfg)
    return dual_transpose(params, kh) @ k


def verify_factorisation(
    params: StableParams,
    theta_grid,
    *,
    form: str = "renewal",
    cfg: QuadConfig = DEFAULT_QUAD,
) -> FactorReport:
    """Compare ``-F(i theta)`` with ``c* R(theta)`` after fitting ``c*`` at the first grid point.

    Raises
    ------
    DomainError
        If the grid is empty or its first point is 0.
    """
    grid = [float(t) for t in np.ravel(theta_grid)]
    if not grid:
        raise DomainError("theta_grid must be non-empty")
    if grid[0] == 0.0:
        raise DomainError("the first grid point fixes the constant and must be non-zero")
    th = np.array(grid)
    lhs = -F(params, 1j * th)
    rhs = factorisation_product(params, th, form=form, cfg=cfg)
    c_star = complex(lhs[0, 0, 0] / rhs[0, 0, 0])
    rel = np.abs(lhs - c_star * rhs) / np.abs(lhs)
    per_theta = rel.reshape(len(grid), -1).max(axis=1)
    return FactorReport(
        fitted_constant=c_star,
        max_rel_residual=float(per_theta.max()),
        theta_grid=grid,
        residuals=per_theta,
    )


def _max_rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.abs(a), np.abs(b))
    return float(np.max(np.abs(a - b) / np.where(scale == 0, 1.0, scale)))


def shift_residual(params: StableParams, lambda_grid, *, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Maximum entrywise relative gap between ``D kappa_circ(lam + alpha - 1) D^-1`` and ``kappa(lam)``.

    ``D = diag(v(alpha - 1))`` comes from the numerically computed eigenvector
    and ``kappa_circ`` from its direct assembly.
    """
    lam = np.asarray(lambda_grid, dtype=float)
    w = circ_weights(params)
    circ = kappa_circ_matrix(params, lam + params.alpha - 1.0, route="direct", cfg=cfg)
    lhs = conjugate_by(1.0 / w, circ)
    return _max_rel(lhs, kappa_matrix(params, lam, cfg=cfg))


def mirror_residual(params: StableParams, lambda_grid, *, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Maximum entrywise relative gap between ``kappa_hat(lam)`` and ``kappa_circ(lam)`` with ``rho`` exchanged."""
    lam = np.asarray(lambda_grid, dtype=float)
    mirrored = kappa_circ_matrix(params.swapped(), lam, route="direct", cfg=cfg)
    return _max_rel(kappa_hat_matrix(params, lam, cfg=cfg), mirrored)


def row_sums_at_zero(params: StableParams, *, form: str = "renewal", cfg: QuadConfig = DEFAULT_QUAD) -> dict:
    """Row sums of ``kappa(0)`` and ``kappa_hat(0)``, i.e. the killing rates per state."""
    return {
        "kappa": np.real(kappa_matrix(params, 0.0, form=form, cfg=cfg)).sum(axis=1),
        "kappa_hat": np.real(kappa_hat_matrix(params, 0.0, form=form, cfg=cfg)).sum(axis=1),
    }
