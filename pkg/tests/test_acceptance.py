"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the lines as they
come; a summary block is printed at the end of every run that includes this file.
"""

import itertools
import math
import time

import numpy as np

from sparsezn.bounds import (
    BoundParams,
    bound_t2_failure,
    bound_t3_failure,
    bound_t3_failure_raw,
    budget_from_tau,
    corollary_t3_delta_max,
    explicit_t3_level,
    exponent_d,
    tune_tau_t2,
)
from sparsezn.experiments import CampaignSpec, run_campaign, verify_small_n
from sparsezn.fourier import CyclicSignal, SupportSet, dft, idft
from sparsezn.kernel import (
    FrequencySet,
    build_certificate,
    cardinality_lower_bound,
    check_condition_iv,
    enumerate_frequency_sets,
    kernel,
)
from sparsezn.recovery import douglas_rachford

from acceptance_log import record
from oracles import ConicOracle, dft_by_sum


def verdict(num, ok, detail):
    line = record(num, ok, detail)
    assert ok, line


def test_criterion_1_worked_example():
    start = time.perf_counter()
    p = BoundParams(1001, 2, 2.0, nu=10)
    tau = tune_tau_t2(1001, 2, 2.0)
    budget = budget_from_tau(tau, 1001)
    d = exponent_d(p)
    success = 1 - bound_t2_failure(p, tau)
    elapsed = time.perf_counter() - start
    ok = (221.0 <= tau * 1001 <= 221.2 and budget == 222 and abs(d - 0.3999) <= 2e-4
          and 0.36 <= success <= 0.38 and success > 1 / 3 and elapsed < 1.0)
    verdict(1, ok, f"tau*N={tau * 1001:.4f} budget={budget} d={d:.6f} "
                   f"success>={success:.4f} ({elapsed * 1e3:.1f} ms)")


def test_criterion_2_monte_carlo_iv():
    start = time.perf_counter()
    report = run_campaign(CampaignSpec(1001, 2, 2.0, nu=10, model="fixed-size", trials=2000, seed=0,
                                       omega_size=222, checks=("iv",)))
    iv = report["checks"]["iv"]
    freq, bound = iv["frequency"], iv["theoretical_lower_bound"]
    elapsed = time.perf_counter() - start
    ok = freq >= 0.37 and iv["consistent"] and elapsed < 300
    verdict(2, ok, f"P(iv)={freq:.4f} Wilson95=[{iv['wilson_low']:.4f}, {iv['wilson_high']:.4f}] "
                   f"bound={bound:.4f}; refined 3/4 level {'reached' if freq >= 0.75 else 'NOT reached'} "
                   f"({elapsed:.1f} s)")


def test_criterion_3_cardinality_bound():
    start = time.perf_counter()
    report = verify_small_n(13, 2, ns=[5, 7, 11, 13], recovery=False)
    spot = math.ceil(cardinality_lower_bound(1001, 2))
    rows = report["rows"]
    elapsed = time.perf_counter() - start
    ok = (not report["bound4_violations"] and len(rows) == 8 and spot == 16 and elapsed < 120)
    sizes = ", ".join(f"N={r['n']},T={r['t']}:{r['iv_sets']} sets min {r['min_iv_size']}>={r['bound4_min_size']}"
                      for r in rows)
    verdict(3, ok, f"{len(report['bound4_violations'])} violations; floor(N=1001,T=2)={spot}; "
                   f"{sizes} ({elapsed:.1f} s)")


def test_criterion_4_exact_recovery():
    start = time.perf_counter()
    report = verify_small_n(13, 2, ns=[7, 11, 13], amplitudes_per_support=10, seed=0, tol=1e-5)
    checked = sum(r.get("recoveries", 0) for r in report["rows"])
    worst = max(r.get("worst_error", 0.0) for r in report["rows"])
    fails = report["recovery_failures"]
    elapsed = time.perf_counter() - start
    ok = not fails and checked > 0 and len(report["rows"]) == 6 and elapsed < 600
    verdict(4, ok, f"{checked - len(fails)}/{checked} recovered, worst error {worst:.2e} ({elapsed:.1f} s)")


def test_criterion_5_iv_implies_iii():
    rng = np.random.default_rng(2024)
    instances, iii_ok, envelope_ok, worst_excess = 0, 0, 0, -math.inf
    while instances < 500:
        n = int(rng.integers(2, 33))
        omega = FrequencySet.from_indicator(rng.random(n) < rng.uniform(0.5, 1.0))
        t = int(rng.integers(1, min(n, 4) + 1))
        k = kernel(omega)
        if k.k0 == 0 or not check_condition_iv(k, t):
            continue
        support = SupportSet(n, tuple(rng.choice(n, t, replace=False)))
        cert = build_certificate(k, support, np.exp(2j * np.pi * rng.random(t)))
        mu = k.coherence()
        instances += 1
        iii_ok += cert.on_margin < 0.5 and cert.off_margin < 0.5
        excess = max(cert.on_margin - (t - 1) * mu, cert.off_margin - t * mu)
        worst_excess = max(worst_excess, excess)
        envelope_ok += excess <= 1e-9
    ok = iii_ok == instances and envelope_ok == instances
    verdict(5, ok, f"margins < 1/2 in {iii_ok}/{instances}; envelope in {envelope_ok}/{instances} "
                   f"(max excess {worst_excess:.2e})")


def test_criterion_6_solver_vs_conic_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    per_set = 20
    worst_gap, worst_res, total, bad, capped = 0.0, 0.0, 0, 0, 0
    for n in range(1, 9):
        for mask in enumerate_frequency_sets(n)[1:]:
            x = np.zeros((per_set, n), complex)
            for i in range(per_set):
                t = int(rng.integers(1, min(2, n) + 1))
                sup = rng.choice(n, t, replace=False)
                x[i, sup] = rng.standard_normal(t) + 1j * rng.standard_normal(t)
            spec = np.fft.fft(x, axis=1, norm="ortho")
            sol, _, res, conv = douglas_rachford(spec, np.broadcast_to(mask, (per_set, n)), max_iter=400_000)
            omega = [int(w) for w in np.flatnonzero(mask)]
            oracle = ConicOracle(n, omega)
            ref = np.array([oracle(spec[i, omega]) for i in range(per_set)])
            gap = np.abs(np.abs(sol).sum(axis=1) - ref)
            worst_gap = max(worst_gap, float(gap.max()))
            worst_res = max(worst_res, float(res.max()))
            bad += int(np.sum((gap > 1e-5) | (res >= 1e-9)))
            capped += int(np.sum(~conv))
            total += per_set
    elapsed = time.perf_counter() - start
    verdict(6, bad == 0, f"{total - bad}/{total} within 1e-5 (worst gap {worst_gap:.2e}, worst residual "
                         f"{worst_res:.2e}, {capped} hit the iteration cap) ({elapsed:.0f} s)")


def test_criterion_7_bound_algebra():
    grid = list(itertools.product((1001, 10_007, 100_003, 1_000_003, 10_000_001), (2, 3), (1.5, 2.0),
                                  (4, 10, 50, 100, 1000)))
    worst_rel = 0.0
    for n, t, c, nu in grid:
        p = BoundParams(n, t, c, nu=nu)
        lhs = bound_t2_failure(p, tune_tau_t2(n, t, c))
        rhs = min(1.0, nu * n ** -exponent_d(p))
        worst_rel = max(worst_rel, abs(lhs - rhs) / rhs)
    explicit_pts, explicit_bad = 0, 0
    for n in (2, 10, 1001, 10**5, 10**9):
        for t in (1, 2, 5):
            for c in (0.5, 5, 10, 20, 40, 120):
                if t > n:
                    continue
                p = BoundParams(n, t, c, nu=1000, mu=10, alpha=2 / 3)
                level = explicit_t3_level(n, t, c)
                explicit_pts += 1
                explicit_bad += not (bound_t3_failure_raw(p) <= level and bound_t3_failure(p) <= level)
    delta = corollary_t3_delta_max(2)
    ok = len(grid) == 100 and worst_rel <= 1e-9 and explicit_bad == 0 and delta == 0.125
    verdict(7, ok, f"T2 identity max rel err {worst_rel:.1e} over {len(grid)} points; explicit T3 level "
                   f"dominates on {explicit_pts - explicit_bad}/{explicit_pts}; delta_max(2)={delta!r}")


def test_criterion_8_transform():
    worst_norm, worst_round, worst_direct = 0.0, 0.0, 0.0
    for n in list(range(1, 65)) + [1001]:
        rng = np.random.default_rng(n)
        x = CyclicSignal(n, rng.standard_normal(n) + 1j * rng.standard_normal(n))
        xh = dft(x)
        worst_norm = max(worst_norm, abs(xh.l2_norm() - x.l2_norm()) / x.l2_norm())
        worst_round = max(worst_round, float(np.abs(idft(xh).values - x.values).max()))
        direct = dft(x, method="direct").values
        worst_direct = max(worst_direct, float(np.abs(xh.values - direct).max()),
                           float(np.abs(idft(x).values - idft(x, method="direct").values).max()))
    # direct path vs plain summation against plain summation on a few sizes
    for n in (1, 7, 30):
        x = np.random.default_rng(n).standard_normal(n) + 0j
        worst_direct = max(worst_direct, float(np.abs(dft(CyclicSignal(n, x), method="direct").values
                                                      - dft_by_sum(list(x))).max()))
    ok = worst_norm <= 1e-10 and worst_round <= 1e-10 and worst_direct <= 1e-10
    verdict(8, ok, f"norm rel err {worst_norm:.1e}, round trip {worst_round:.1e}, "
                   f"fast vs direct {worst_direct:.1e} over N=1..64 and 1001")
