import math

import numpy as np
import pytest
from scipy import stats

from deepwh import StableParams, char_exponent
from deepwh.errors import BudgetError, DomainError, RegimeError
from deepwh.exit_laws import exit_probability, rogozin_conditional_cdf
from deepwh.montecarlo import (
    ENV_WORKERS,
    HISTOGRAM_COLUMNS,
    MCConfig,
    _standard_block,
    default_workers,
    estimate_ladder_overshoot,
    histogram,
    ks_statistic,
    proportion_estimate,
    rng_stream,
    sample_stable_increment,
    simulate_two_sided_exit,
    standard_from_uniforms,
)

SAMPLER_PARAMS = [(0.5, 0.3), (0.8, 0.5), (1.0, 0.5), (1.2, 0.7), (1.4, 0.4), (1.8, 0.5)]


# ---------------------------------------------------------------- increments


@pytest.mark.parametrize("alpha, rho", SAMPLER_PARAMS)
def test_fast_sampler_matches_reference(alpha, rho):
    p = StableParams(alpha, rho)
    rng = np.random.default_rng(1)
    u = rng.random((64, 256))
    e = rng.standard_exponential((64, 256))
    ref = standard_from_uniforms(p, u, e)
    fast = _standard_block(p, u.copy(), e.copy())
    np.testing.assert_allclose(fast, ref, rtol=1e-10, atol=1e-300)


@pytest.mark.parametrize("alpha, rho", SAMPLER_PARAMS)
def test_positivity_probability_is_rho(alpha, rho):
    p = StableParams(alpha, rho)
    x = sample_stable_increment(p, 1.0, np.random.default_rng(2), 10**6)
    est = proportion_estimate(int(np.count_nonzero(x >= 0)), x.size)
    assert est.within(rho, 4.0)


@pytest.mark.parametrize("alpha, rho", SAMPLER_PARAMS)
def test_characteristic_function(alpha, rho):
    p = StableParams(alpha, rho)
    x = sample_stable_increment(p, 1.0, np.random.default_rng(3), 4 * 10**5)
    for theta in (-1.5, 0.3, 1.0):
        z = np.exp(1j * theta * x)
        target = np.exp(-char_exponent(p, theta))
        se = np.sqrt(np.var(z.real) / z.size), np.sqrt(np.var(z.imag) / z.size)
        assert abs(z.real.mean() - target.real) <= 4 * se[0]
        assert abs(z.imag.mean() - target.imag) <= 4 * se[1]


@pytest.mark.parametrize("alpha, rho, k", [(0.7, 0.4, 500.0), (1.5, 0.5, 30.0)])
def test_right_tail_constant(alpha, rho, k):
    # P(X > k) k^alpha -> Gamma(alpha) sin(pi alpha rho) / pi.
    p = StableParams(alpha, rho)
    x = sample_stable_increment(p, 1.0, np.random.default_rng(4), 2 * 10**6)
    limit = math.gamma(alpha) * math.sin(math.pi * alpha * rho) / math.pi
    assert p.c_plus / alpha == pytest.approx(limit, rel=1e-12)
    assert np.mean(x > k) * k**alpha == pytest.approx(limit, rel=0.1)


def test_increment_scaling():
    p = StableParams(1.3, 0.6)
    a = sample_stable_increment(p, 0.01, np.random.default_rng(5), 1000)
    b = sample_stable_increment(p, 1.0, np.random.default_rng(5), 1000)
    np.testing.assert_allclose(a, 0.01 ** (1 / 1.3) * b, rtol=1e-14)
    with pytest.raises(DomainError):
        sample_stable_increment(p, 0.0, np.random.default_rng(5), 10)


# ---------------------------------------------------------------- streams and config


def test_rng_streams_are_reproducible_and_distinct():
    a = rng_stream(7, 3).random(10_000)
    np.testing.assert_array_equal(a, rng_stream(7, 3).random(10_000))
    draws = np.concatenate([rng_stream(7, k).random(10_000) for k in range(5)])
    assert np.unique(draws).size == draws.size
    with pytest.raises(DomainError):
        rng_stream(7, -1)


def test_default_workers(monkeypatch):
    monkeypatch.setenv(ENV_WORKERS, "3")
    assert default_workers() == 3
    monkeypatch.setenv(ENV_WORKERS, "zero")
    with pytest.raises(DomainError):
        default_workers()
    monkeypatch.setenv(ENV_WORKERS, "0")
    with pytest.raises(DomainError):
        default_workers()
    monkeypatch.delenv(ENV_WORKERS)
    assert default_workers() >= 1


@pytest.mark.parametrize(
    "kwargs",
    [dict(n_paths=0), dict(time_step=0.0), dict(seed=-1), dict(n_workers=0), dict(refine=1.0), dict(chunk_size=0)],
)
def test_config_validation(kwargs):
    base = dict(n_paths=10)
    base.update(kwargs)
    with pytest.raises(DomainError):
        MCConfig(**base)


def test_proportion_estimate():
    est = proportion_estimate(30, 100)
    assert est.value == 0.3 and est.std_error == pytest.approx(math.sqrt(0.21 / 100))
    assert est.z_score(0.3) == 0.0 and not est.within(0.5)
    assert proportion_estimate(0, 10).z_score(0.1) == math.inf
    with pytest.raises(DomainError):
        proportion_estimate(0, 0)


# ---------------------------------------------------------------- exit simulation


def test_results_do_not_depend_on_worker_count():
    p = StableParams(1.2, 0.5)
    base = dict(n_paths=1500, time_step=1e-3, seed=11, chunk_size=500)
    one = simulate_two_sided_exit(p, 0.3, MCConfig(n_workers=1, **base))
    three = simulate_two_sided_exit(p, 0.3, MCConfig(n_workers=3, **base))
    again = simulate_two_sided_exit(p, 0.3, MCConfig(n_workers=1, **base))
    for rec in (three, again):
        np.testing.assert_array_equal(one.side, rec.side)
        np.testing.assert_array_equal(one.overshoot, rec.overshoot)
        np.testing.assert_array_equal(one.n_steps, rec.n_steps)
    assert set(np.unique(one.side)) <= {-1, 1}
    assert np.all(one.overshoot >= 0)


def test_scaling_invariance():
    # Space scaled by 2 and time by 2^alpha gives the same paths.
    p = StableParams(1.4, 0.6)
    h = 1e-3
    small = simulate_two_sided_exit(p, 0.3, MCConfig(n_paths=2000, time_step=h, seed=5))
    big = simulate_two_sided_exit(p, 0.6, MCConfig(n_paths=2000, time_step=h * 2**1.4, seed=5), half_width=2.0)
    assert np.mean(small.side == big.side) > 0.999
    same = small.side == big.side
    np.testing.assert_allclose(big.overshoot[same], 2 * small.overshoot[same], rtol=1e-6, atol=1e-12)


def test_symmetric_start_exits_each_side_equally():
    rec = simulate_two_sided_exit(StableParams(0.8, 0.5), 0.0, MCConfig(n_paths=20_000, time_step=1e-3, seed=6))
    assert rec.up_probability().within(0.5)
    ks = stats.ks_2samp(rec.overshoots(1), rec.overshoots(-1))
    assert ks.pvalue > 0.01


@pytest.mark.parametrize("alpha, rho", [(0.6, 0.5), (1.4, 0.4)])
def test_exit_law_against_rogozin(alpha, rho):
    p = StableParams(alpha, rho)
    rec = simulate_two_sided_exit(p, 0.3, MCConfig(n_paths=20_000, time_step=1e-4, seed=8))
    assert rec.up_probability().within(exit_probability(p, 0.3))
    up, _ = ks_statistic(rec.overshoots(1), rogozin_conditional_cdf(p, 0.3))
    down, _ = ks_statistic(rec.overshoots(-1), rogozin_conditional_cdf(p.swapped(), -0.3))
    assert up <= 0.02 and down <= 0.02


def test_repeated_estimates_are_calibrated():
    p = StableParams(0.9, 0.5)
    target = exit_probability(p, 0.3)
    hits = 0
    for seed in range(100):
        rec = simulate_two_sided_exit(p, 0.3, MCConfig(n_paths=400, time_step=1e-3, seed=seed))
        hits += rec.up_probability().within(target)
    assert hits >= 98


def test_plain_skeleton_bias_shrinks_with_step():
    # Without refinement, skipped excursions bias the overshoot for alpha > 1.
    p = StableParams(1.6, 0.5)
    cdf = rogozin_conditional_cdf(p, 0.3)
    stats_by_h = []
    for h in (4e-3, 1e-3, 2.5e-4):
        rec = simulate_two_sided_exit(p, 0.3, MCConfig(n_paths=10_000, time_step=h, seed=9, refine=0.0))
        stats_by_h.append(ks_statistic(rec.overshoots(1), cdf)[0])
    assert stats_by_h[0] > stats_by_h[1] > stats_by_h[2]


def test_exit_errors():
    p = StableParams(1.2, 0.5)
    with pytest.raises(BudgetError):
        simulate_two_sided_exit(p, 0.0, MCConfig(n_paths=50, time_step=1e-6, max_steps=10))
    with pytest.raises(DomainError):
        simulate_two_sided_exit(p, 0.3, MCConfig(n_paths=10, time_step=0.1))
    with pytest.raises(DomainError):
        simulate_two_sided_exit(p, 1.0, MCConfig(n_paths=10))
    with pytest.raises(DomainError):
        simulate_two_sided_exit(p, 0.0, MCConfig(n_paths=10), half_width=0.0)


# ---------------------------------------------------------------- ladder overshoot


def test_ladder_sample_at_finite_level():
    # At level a the sample is the exit law of (-1, 1) from e^{-a} on a log scale.
    p, a = StableParams(0.7, 0.4), 2.0
    x = math.exp(-a)
    s = estimate_ladder_overshoot(p, a, MCConfig(n_paths=8000, time_step=1e-3, seed=10))
    assert s.branch(1).size + s.branch(2).size == 8000
    assert np.all(s.u >= 0)
    assert s.branch_probability(1).within(exit_probability(p, x))
    up = rogozin_conditional_cdf(p, x)
    down = rogozin_conditional_cdf(p.swapped(), -x)
    assert ks_statistic(s.branch(1), lambda u: up(np.expm1(u)))[0] <= 0.03
    assert ks_statistic(s.branch(2), lambda u: down(np.expm1(u)))[0] <= 0.03


def test_ladder_regime_and_level():
    with pytest.raises(RegimeError):
        estimate_ladder_overshoot(StableParams(1.3, 0.5), 2.0, MCConfig(n_paths=10))
    with pytest.raises(DomainError):
        estimate_ladder_overshoot(StableParams(0.7, 0.5), 0.0, MCConfig(n_paths=10))


# ---------------------------------------------------------------- summaries


def test_ks_statistic_against_known_law():
    rng = np.random.default_rng(12)
    d, pval = ks_statistic(rng.random(5000), lambda t: np.clip(t, 0, 1))
    assert d < 0.03 and pval > 0.01
    d, _ = ks_statistic(rng.random(5000) ** 2, lambda t: np.clip(t, 0, 1))
    assert d > 0.2


def test_histogram_rows():
    vals = np.array([0.1, 0.2, 0.6, 0.7, 0.8, 1.5])
    rows = histogram(vals, [0.0, 0.5, 1.0], n_total=10, analytic_cdf=lambda t: np.clip(t, 0, 1), analytic_mass=0.5)
    assert rows.shape == (2, len(HISTOGRAM_COLUMNS))
    np.testing.assert_array_equal(rows[:, 2], [2, 3])
    np.testing.assert_allclose(rows[:, 3], [2 / 5, 3 / 5])
    np.testing.assert_allclose(rows[:, 4], [0.5, 0.5])
    assert np.all(np.isnan(histogram(vals, [0.0, 1.0], 6)[:, 4]))
