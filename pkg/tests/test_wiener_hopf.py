import math

import numpy as np
import pytest

from conftest import rel_err
from deepwh import StableParams
from deepwh.bernstein_factors import kappa_qp_laplace, kappa_qp_mass, standard_indices
from deepwh.errors import DomainError
from deepwh.map_exponent import F, conjugate_by, dual_transpose
from deepwh.quadrature import QuadConfig
from deepwh.wiener_hopf import (
    LadderFactor,
    circ_weights,
    factorisation_product,
    kappa_circ_matrix,
    kappa_hat_matrix,
    kappa_matrix,
    ladder_components,
    mirror_residual,
    row_sums_at_zero,
    shift_residual,
    verify_factorisation,
)

THETA = [-5.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 5.0]
LAM = np.array([0.0, 0.5, 1.0, 2.0, 5.0])


@pytest.mark.parametrize("alpha, rho", [(0.6, 0.5), (0.6, 0.3), (1.0, 0.5), (1.4, 0.6), (1.4, 0.45), (1.8, 0.5), (1.8, 0.52)])
def test_factorisation_holds(alpha, rho):
    rep = verify_factorisation(StableParams(alpha, rho), THETA)
    assert rep.max_rel_residual <= 1e-6
    assert abs(rep.fitted_constant.imag) <= 1e-10 * abs(rep.fitted_constant)
    assert rep.fitted_constant.real > 0
    assert rep.residuals.shape == (len(THETA),)


def test_cauchy_constant_is_two_over_pi():
    rep = verify_factorisation(StableParams(1.0, 0.5), THETA)
    assert rep.fitted_constant.real == pytest.approx(2 / math.pi, rel=1e-9)


def test_display_form_does_not_factorise():
    rep = verify_factorisation(StableParams(0.8, 0.5), THETA, form="display")
    assert rep.max_rel_residual > 1e-2


def test_residual_improves_with_tolerance():
    p = StableParams(0.8, 0.3)
    loose = verify_factorisation(p, THETA, cfg=QuadConfig(rel_tol=1e-3, abs_tol=1e-6, max_levels=12))
    tight = verify_factorisation(p, THETA)
    assert tight.max_rel_residual < loose.max_rel_residual


def test_conjugate_symmetry_in_theta(any_params):
    r = factorisation_product(any_params, np.array([1.3, -1.3]))
    assert rel_err(r[1], np.conj(r[0])) <= 1e-12


def test_factorisation_product_direct_formula():
    p = StableParams(1.4, 0.6)
    th = 0.7
    d = np.array([p.sin_arho, p.sin_arho_hat]) / (p.sin_arho + p.sin_arho_hat)
    kh = kappa_hat_matrix(p, 1j * th)
    k = kappa_matrix(p, -1j * th)
    manual = np.diag(1 / d) @ kh.T @ np.diag(d) @ k
    assert rel_err(factorisation_product(p, th), manual) <= 1e-14


def test_real_lambda_sign_pattern(any_params):
    for kind in ("ascending", "dual_ascending", "circ_ascending"):
        m = LadderFactor(any_params, kind=kind)(LAM)
        assert not np.iscomplexobj(m)
        assert np.all(m[:, 0, 1] <= 0) and np.all(m[:, 1, 0] <= 0)
        assert np.all(m[:, 0, 0] >= 0) and np.all(m[:, 1, 1] >= 0)
        assert np.all(np.diff(m[:, 0, 0]) > 0) and np.all(np.diff(m[:, 1, 1]) > 0)


def test_killing_dichotomy(any_params):
    sums = row_sums_at_zero(any_params)
    al = any_params.alpha
    if al < 1:
        assert np.max(np.abs(sums["kappa"])) <= 1e-9 and np.all(sums["kappa_hat"] > 1e-9)
    elif al > 1:
        assert np.all(sums["kappa"] > 1e-9) and np.max(np.abs(sums["kappa_hat"])) <= 1e-9
    else:
        assert np.max(np.abs(sums["kappa"])) <= 1e-9 and np.max(np.abs(sums["kappa_hat"])) <= 1e-9


def test_symmetric_index_swap():
    for al in (0.8, 1.5):
        m = kappa_matrix(StableParams(al, 0.5), np.array([0.5, 2.0, 1 + 1j]))
        assert rel_err(m[:, 1, 1], m[:, 0, 0]) <= 1e-13
        assert rel_err(m[:, 1, 0], m[:, 0, 1]) <= 1e-13


def test_hat_is_circ_with_rho_exchanged(big_params):
    assert mirror_residual(big_params, [0.5, 1.0, 2.0, 5.0]) <= 1e-8


def test_shift_relation(big_params):
    assert shift_residual(big_params, [0.5, 1.0, 2.0, 5.0]) <= 1e-8


def test_shift_routes_agree():
    p = StableParams(1.5, 0.5)
    lam = np.array([1.0])
    direct = kappa_circ_matrix(p, lam, route="direct")
    shifted = kappa_circ_matrix(p, lam, route="shift")
    assert rel_err(shifted, direct) <= 1e-10
    # the weights implement v(alpha - 1), the right null vector of F(alpha - 1)
    assert np.max(np.abs(F(p, p.alpha - 1).real @ circ_weights(p))) <= 1e-12


def test_shift_by_hand(big_params):
    p = big_params
    lam = np.array([0.5, 2.0])
    w = circ_weights(p)
    circ = kappa_circ_matrix(p, lam + p.alpha - 1)
    manual = np.einsum("ij,njk,kl->nil", np.diag(w), circ, np.diag(1 / w))
    assert rel_err(manual, kappa_matrix(p, lam)) <= 1e-8


def test_cauchy_circ_equals_kappa():
    p = StableParams(1.0, 0.5)
    s = np.array([0.3, 1.0, 4.0])
    assert rel_err(kappa_circ_matrix(p, s), kappa_matrix(p, s)) <= 1e-12


def test_components_at_zero():
    for al, rho in ((0.8, 0.3), (1.4, 0.6)):
        p = StableParams(al, rho)
        unkilled = "ascending" if al < 1 else "dual_ascending"
        killed = "dual_ascending" if al < 1 else "ascending"
        c = ladder_components(LadderFactor(p, kind=unkilled), LAM)
        assert np.max(np.abs(c.phi[0])) <= 1e-12
        assert c.k[0, 0, 1] == pytest.approx(1.0) and c.k[0, 1, 0] == pytest.approx(1.0)
        ck = ladder_components(LadderFactor(p, kind=killed), LAM)
        sums = row_sums_at_zero(p)["kappa_hat" if al < 1 else "kappa"]
        # with killing, Phi_i(0) is the killing rate of state i
        assert ck.phi[0] == pytest.approx(sums, rel=1e-12)


def test_switching_transform_small_alpha():
    p = StableParams(0.8, 0.3)
    idx = standard_indices(p)
    c = ladder_components(LadderFactor(p), LAM)
    expected = kappa_qp_laplace(p, idx["D"], LAM) / kappa_qp_mass(p, idx["D"])
    np.testing.assert_allclose(c.k[:, 1, 0], expected, rtol=1e-10)
    assert np.all(np.diff(c.k[:, 1, 0]) < 0)
    ratio = c.rates[1, 0] / c.rates[0, 1]
    s, sh = p.sin_arho, p.sin_arho_hat
    expected_ratio = s**2 * kappa_qp_mass(p, idx["D"]) / (sh**2 * kappa_qp_mass(p, idx["B"]))
    assert ratio == pytest.approx(expected_ratio, rel=1e-12)


def test_dual_transpose_of_identity():
    p = StableParams(1.2, 0.6)
    eye = np.eye(2)
    assert np.allclose(dual_transpose(p, eye), eye)
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    d = np.array([2.0, 5.0])
    assert np.allclose(conjugate_by(d, m), np.diag(1 / d) @ m @ np.diag(d))


def test_domain_errors():
    p = StableParams(0.8, 0.5)
    with pytest.raises(DomainError):
        LadderFactor(p, kind="descending")
    with pytest.raises(DomainError):
        LadderFactor(p, form="literal")
    with pytest.raises(DomainError):
        kappa_matrix(p, -0.9)
    with pytest.raises(DomainError):
        ladder_components(LadderFactor(p), [-1.0])
