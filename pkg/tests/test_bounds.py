import math

import numpy as np
import pytest
from scipy import stats

from sparsezn.bounds import (
    BernoulliConfig,
    BoundParams,
    bound_report,
    bound_t2_failure,
    bound_t2_failure_raw,
    bound_t3_failure,
    bound_t3_failure_raw,
    budget_from_tau,
    chernoff_diagnostic,
    corollary_t2_c_threshold,
    corollary_t3_delta_max,
    crt_reference_size,
    explicit_t3_level,
    exponent_d,
    is_pm1_mod6,
    sample_omega,
    sample_omega_fixed,
    tune_tau_t2,
    tune_tau_t3,
)


def d_by_hand(c, t, nu):
    a = math.cos(math.pi / nu)
    return c * (a**2 - a**4 / t**2) - 1


# -- tuning -----------------------------------------------------------------------

def test_tau_t2_examples():
    assert tune_tau_t2(1001, 2, 2) * 1001 == pytest.approx(32 * math.log(1001))
    assert 221.0 <= tune_tau_t2(1001, 2, 2) * 1001 <= 221.2
    assert tune_tau_t2(1001, 1, 2) * 1001 == pytest.approx(55.27, abs=0.01)
    assert tune_tau_t2(math.e, 1, 0.25) * math.e == pytest.approx(1.0)


def test_tau_t3_examples():
    assert tune_tau_t3(1001, 2, 2) * 1001 == pytest.approx(110.54, abs=0.01)
    assert tune_tau_t3(1001, 1, 3) == tune_tau_t2(1001, 1, 3)
    assert tune_tau_t3(10**6, 3, 1) * 10**6 == pytest.approx(165.8, abs=0.05)


def test_tau_rejects_saturation():
    with pytest.raises(ValueError):
        tune_tau_t2(50, 3, 2)
    with pytest.raises(ValueError):
        tune_tau_t3(1, 1, 1)


def test_budget_rounds_up():
    assert budget_from_tau(tune_tau_t2(1001, 2, 2), 1001) == 222
    assert budget_from_tau(0.5, 10) == 5


# -- exponent d ---------------------------------------------------------------------

def test_exponent_d_example():
    d = exponent_d(BoundParams(1001, 2, 2, nu=10))
    assert d == pytest.approx(d_by_hand(2, 2, 10), abs=1e-14)
    assert d == pytest.approx(0.39995, abs=1e-4)


def test_exponent_d_limit_and_threshold():
    for t in (2, 3, 5):
        for c in (1.1, 1.5, 3.0):
            d_inf = exponent_d(BoundParams(1001, t, c, nu=10**7))
            assert d_inf == pytest.approx(c * (1 - 1 / t**2) - 1, abs=1e-10)
            assert (d_inf > 0) == (c > corollary_t2_c_threshold(t))


def test_exponent_d_zero_crossing():
    a = math.cos(math.pi / 12)
    c = 1 / (a**2 - a**4 / 9)
    assert exponent_d(BoundParams(1001, 3, c, nu=12)) == pytest.approx(0.0, abs=1e-14)


def test_exponent_d_affine_in_c():
    for c in (0.5, 2.0, 7.0):
        d1 = exponent_d(BoundParams(1001, 2, c))
        d2 = exponent_d(BoundParams(1001, 2, 2 * c))
        assert d2 == pytest.approx(2 * d1 + 1, abs=1e-12)


def test_exponent_d_monotone_on_grid():
    for t in (2, 3, 4):
        cs = np.linspace(0.5, 10, 25)
        ds = [exponent_d(BoundParams(1001, t, c, nu=10)) for c in cs]
        assert np.all(np.diff(ds) > 0)
        nus = range(4, 200)
        ds = [exponent_d(BoundParams(1001, t, 2.0, nu=nu)) for nu in nus]
        assert np.all(np.diff(ds) > 0)


def test_exponent_d_requires_nu_above_3():
    with pytest.raises(ValueError):
        exponent_d(BoundParams(1001, 2, 2, nu=3))


def test_admissible_nu_exists_above_threshold():
    nus = np.unique(np.round(np.logspace(np.log10(4), 6, 400)).astype(int))
    for t in (2, 3, 4, 6):
        thr = corollary_t2_c_threshold(t)
        for c in thr * np.array([1.001, 1.01, 1.1, 2.0]):
            assert any(exponent_d(BoundParams(1001, t, c, nu=int(nu))) > 0 for nu in nus)


# -- T2 failure bound -----------------------------------------------------------------

def test_t2_example_bound():
    p = BoundParams(1001, 2, 2, nu=10)
    fail = bound_t2_failure(p, tune_tau_t2(1001, 2, 2))
    assert fail == pytest.approx(10 * 1001 ** -d_by_hand(2, 2, 10), rel=1e-12)
    assert fail == pytest.approx(0.631, abs=1e-3)
    assert 1 - fail > 1 / 3


def test_t2_bound_clamps_when_tau_vanishes():
    p = BoundParams(1001, 2, 2)
    assert bound_t2_failure_raw(p, 0.0) == pytest.approx(1001 * 10)
    assert bound_t2_failure(p, 0.0) == 1.0


def test_t2_identity_on_grid():
    for n in (1001, 997, 5, 10_007, 10**6 + 1):
        for t in (1, 2, 3):
            for c in (0.5, 1.0, 2.0, 4.0):
                for nu in (4, 10, 50):
                    try:
                        tau = tune_tau_t2(n, t, c)
                    except ValueError:
                        continue
                    p = BoundParams(n, t, c, nu=nu)
                    lhs = bound_t2_failure(p, tau)
                    rhs = min(1.0, nu * n ** -exponent_d(p))
                    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_mod6_guard():
    for n in (1001, 997):
        assert is_pm1_mod6(n)
    for n in (999, 1000, 1002):
        assert not is_pm1_mod6(n)
        with pytest.raises(ValueError):
            bound_t2_failure(BoundParams(n, 2, 2), 0.2)
        assert 0 <= bound_t2_failure(BoundParams(n, 2, 2), 0.2, acknowledge_mod6=True) <= 1


# -- T3 ---------------------------------------------------------------------------

def test_alpha_prime():
    assert BoundParams(1001, 2, 2, mu=10, alpha=2 / 3).alpha_prime == pytest.approx(0.35380, abs=1e-5)


def test_sparsity_cannot_exceed_n():
    with pytest.raises(ValueError):
        BoundParams(2, 5, 1.0)


def test_t3_rejects_nonpositive_alpha_prime():
    with pytest.raises(ValueError):
        bound_t3_failure(BoundParams(1001, 2, 2, mu=2, alpha=0.5))


def test_t3_matches_formula():
    p = BoundParams(5000, 3, 40, nu=100, mu=20, alpha=0.6)
    a, ap = math.cos(math.pi / 100), 0.6 - 2 * math.sin(math.pi / 40)
    expect = (3 * 20**3 * 100 * 5000 ** (-40 * a * a * ap * ap)
              + 4997 * 20**3 * 100 * 5000 ** (-40 * a * a * 0.4**2))
    assert bound_t3_failure_raw(p) == pytest.approx(expect, rel=1e-12)


def test_explicit_level_dominates_t3_on_grid():
    for n in (2, 10, 1001, 10**5, 10**9):
        for t in (1, 2, 5):
            for c in (0.5, 5, 10, 30, 60, 120):
                if t > n:
                    continue
                p = BoundParams(n, t, c, nu=1000, mu=10, alpha=2 / 3)
                assert bound_t3_failure_raw(p) <= explicit_t3_level(n, t, c) * (1 + 1e-12)
                assert bound_t3_failure(p) <= explicit_t3_level(n, t, c) * (1 + 1e-12)


def test_t3_degenerates_as_alpha_to_one():
    p = BoundParams(1001, 2, 5, nu=10, mu=1000, alpha=1 - 1e-9)
    assert bound_t3_failure_raw(p) > 1
    assert bound_t3_failure(p) == 1.0


def test_delta_max():
    assert corollary_t3_delta_max(2) == 0.125
    assert corollary_t3_delta_max(9) == pytest.approx(64 / 36)
    assert corollary_t3_delta_max(1 + 1e-9) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        corollary_t3_delta_max(1.0)


def test_crt_reference():
    assert crt_reference_size(1001, 2, 0.1) == 334
    assert crt_reference_size(1001, 0, 0.1) == 0
    assert crt_reference_size(math.e, 1, 1e-12) == 22


# -- sampling -----------------------------------------------------------------------

def test_bernoulli_reproducible():
    cfg = BernoulliConfig(200, 0.3, seed=42)
    assert sample_omega(cfg) == sample_omega(cfg)
    assert sample_omega(cfg, trial=3) == sample_omega(cfg, trial=3)
    assert sample_omega(cfg, trial=3) != sample_omega(cfg, trial=4)


def test_bernoulli_near_one_takes_everything():
    assert len(sample_omega(BernoulliConfig(100, 1 - 1e-12, seed=1))) == 100


def test_bernoulli_config_validation():
    for tau in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            BernoulliConfig(10, tau)


def test_example_budget_mean():
    tau = 221.08 / 1001
    sizes = [len(sample_omega(BernoulliConfig(1001, tau, seed=7), trial=i)) for i in range(2000)]
    assert abs(np.mean(sizes) - 221.08) < 3 * math.sqrt(1001 * tau * (1 - tau) / 2000)


def test_size_distribution_is_binomial():
    n, tau, draws = 60, 0.3, 10_000
    sizes = np.array([len(sample_omega(BernoulliConfig(n, tau, seed=2024), trial=i)) for i in range(draws)])
    se = math.sqrt(n * tau * (1 - tau) / draws)
    assert abs(sizes.mean() - n * tau) < 3 * se
    ks = np.arange(n + 1)
    expected = stats.binom.pmf(ks, n, tau) * draws
    observed = np.bincount(sizes, minlength=n + 1).astype(float)
    # pool the tails so every cell expects at least 5
    keep = expected >= 5
    lo, hi = np.flatnonzero(keep)[[0, -1]]
    obs = np.concatenate([[observed[: lo].sum()], observed[lo:hi + 1], [observed[hi + 1:].sum()]])
    exp = np.concatenate([[expected[: lo].sum()], expected[lo:hi + 1], [expected[hi + 1:].sum()]])
    exp *= obs.sum() / exp.sum()
    assert stats.chisquare(obs, exp).pvalue > 0.001


def test_fixed_size_sampling():
    omega = sample_omega_fixed(1001, 222, seed=3, trial=0)
    assert len(omega) == 222
    assert omega == sample_omega_fixed(1001, 222, seed=3, trial=0)
    counts = np.zeros(20)
    for i in range(4000):
        counts[list(sample_omega_fixed(20, 5, seed=1, trial=i).members)] += 1
    assert stats.chisquare(counts).pvalue > 0.001
    with pytest.raises(ValueError):
        sample_omega_fixed(10, 11)


# -- diagnostics & reports -------------------------------------------------------------

def test_chernoff_chain_is_an_upper_bound():
    out = chernoff_diagnostic(31, 1, 0.5, t=1, j=0, nu=10, trials=20_000, seed=0)
    se = math.sqrt(max(out["empirical"], 1e-4) / 20_000)
    assert out["empirical"] <= out["chernoff_bound"] + 3 * se
    assert out["chernoff_bound"] <= out["poisson_relaxation"] * (1 + 1e-12)
    assert out["empirical"] > 0


def test_bound_reports():
    p = BoundParams(1001, 2, 2, nu=10)
    r = bound_report("t2", p)
    assert r["derived"]["budget"] == 222
    assert r["derived"]["clamped"] is False
    assert r["inputs"]["n"] == 1001
    r3 = bound_report("t3", BoundParams(1001, 2, 20, nu=1000))
    assert r3["derived"]["clamped"] is True
    assert "explicit_level" in r3["derived"]
    assert r3["derived"]["tau"] is None
    assert bound_report("crt", BoundParams(1001, 2, 2, delta=0.1))["derived"]["size"] == 334
    assert bound_report("bound4", p)["derived"]["min_size"] == 16
    with pytest.raises(ValueError):
        bound_report("nope", p)
