"""Monte Carlo campaigns, exhaustive small-N verification and the worked example."""

from __future__ import annotations

import csv
import io
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from . import bounds as B
from .fourier import CyclicSignal, SupportSet
from .kernel import (
    FrequencySet,
    build_certificate,
    cardinality_lower_bound,
    check_condition_iii,
    check_condition_iv,
    enumerate_frequency_sets,
    iv_holds_batch,
    kernel,
)
from .recovery import (
    DEFAULT_RECOVERY_TOL,
    SolverDidNotConverge,
    check_exact_recovery,
    douglas_rachford,
    nullspace_falsifier,
)

__all__ = [
    "CHECKS",
    "CampaignSpec",
    "run_campaign",
    "run_trial",
    "wilson_interval",
    "report_to_csv",
    "REPORT_SCHEMA",
    "verify_small_n",
    "reproduce_worked_example",
    "reproduce_paper_example",
]

CHECKS = ("iv", "iii", "ii-falsify", "recovery")
MODELS = ("bernoulli", "fixed-size")
SMALL_N_MAX = 13


@dataclass(frozen=True)
class CampaignSpec:
    n: int
    t_sparsity: int
    c: float
    nu: int = 10
    mu: int = 10
    alpha: float = 2.0 / 3.0
    model: str = "bernoulli"
    trials: int = 2000
    seed: int = 0
    checks: tuple = ("iv",)
    # overrides of the T2 tuning rule
    tau: Optional[float] = None
    omega_size: Optional[int] = None
    falsifier_trials: int = 200
    acknowledge_mod6: bool = False

    def __post_init__(self):
        object.__setattr__(self, "checks", tuple(self.checks))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.checks:
            raise ValueError("at least one check is required")
        bad = [c for c in self.checks if c not in CHECKS]
        if bad:
            raise ValueError(f"unknown checks {bad}; choose from {CHECKS}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.n < 2:
            raise ValueError("N must be >= 2")
        if self.t_sparsity > self.n:
            raise ValueError("T cannot exceed N")
        self.params()  # validates the rest

    def params(self) -> B.BoundParams:
        return B.BoundParams(self.n, self.t_sparsity, self.c, self.nu, self.mu, self.alpha)

    def resolved_tau(self) -> float:
        if self.tau is not None:
            if not 0 < self.tau < 1:
                raise ValueError("tau must lie in (0, 1)")
            return self.tau
        if self.omega_size is not None:
            return self.omega_size / self.n
        return B.tune_tau_t2(self.n, self.t_sparsity, self.c)

    def resolved_size(self) -> int:
        if self.omega_size is not None:
            return self.omega_size
        return B.budget_from_tau(self.resolved_tau(), self.n)

    @classmethod
    def from_dict(cls, data: dict) -> CampaignSpec:
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown campaign fields {sorted(extra)}")
        return cls(**data)


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    lo, hi = proportion_confint(successes, trials, alpha=0.05, method="wilson")
    return float(lo), float(hi)


def run_trial(spec: CampaignSpec, index: int) -> dict:
    """One independent trial; all randomness flows from ``(spec.seed, index)``."""
    rng = B.trial_rng(spec.seed, index)
    n, t = spec.n, spec.t_sparsity
    if spec.model == "bernoulli":
        omega = FrequencySet.from_indicator(rng.random(n) < spec.resolved_tau())
    else:
        omega = FrequencySet(n, tuple(rng.permutation(n)[: spec.resolved_size()]))
    k = kernel(omega)
    iv = check_condition_iv(k, t)
    rec = {
        "trial": index,
        "omega_size": len(omega),
        "coherence": k.coherence() if k.k0 > 0 else None,
    }
    support = SupportSet(n, tuple(rng.choice(n, size=t, replace=False)))
    if "iv" in spec.checks:
        rec["iv"] = iv.holds
    if "iii" in spec.checks:
        lam = np.exp(2j * np.pi * rng.random(t))
        if k.k0 > 0:
            cert = build_certificate(k, support, lam)
            rec.update(iii=check_condition_iii(cert), on_margin=cert.on_margin, off_margin=cert.off_margin)
        else:
            rec.update(iii=False, on_margin=None, off_margin=None)
    if "ii-falsify" in spec.checks:
        v = nullspace_falsifier(omega, support, spec.falsifier_trials, seed=int(rng.integers(2**63)))
        rec.update({"ii-falsify": not v.violated, "ii_min_slack": v.min_slack})
    if "recovery" in spec.checks:
        amps = rng.standard_normal(t) + 1j * rng.standard_normal(t)
        x = CyclicSignal.sparse(n, support.members, amps)
        if len(omega) == 0:
            rec.update(recovery=False, recovery_error=None, converged=False)
        else:
            try:
                chk = check_exact_recovery(x, omega)
                rec.update(recovery=chk.exact, recovery_error=chk.error, converged=True)
            except SolverDidNotConverge as exc:
                err = float(np.abs(exc.result.solution.values - x.values).max())
                rec.update(recovery=False, recovery_error=err, converged=False)
    return rec


def _run_chunk(args):
    spec, indices = args
    return [run_trial(spec, i) for i in indices]


def run_campaign(spec: CampaignSpec, jobs: int = 1) -> dict:
    """Run ``spec.trials`` trials and aggregate per-check frequencies.

    Each check's empirical frequency is paired with a Wilson 95% interval and
    with the T2 lower bound ``1 - nu N^-d`` (evaluated at the campaign's
    selection rate). A check is flagged inconsistent when the whole interval
    sits below a nonvacuous lower bound. On KeyboardInterrupt the completed
    trials are aggregated and ``interrupted`` is set.
    """
    t_start = time.perf_counter()
    tau = spec.resolved_tau()
    records: list[dict] = []
    interrupted = False
    try:
        if jobs <= 1:
            for i in range(spec.trials):
                records.append(run_trial(spec, i))
        else:
            chunks = np.array_split(np.arange(spec.trials), jobs * 4)
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for part in pool.map(_run_chunk, [(spec, [int(i) for i in c]) for c in chunks if c.size]):
                    records.extend(part)
    except KeyboardInterrupt:
        interrupted = True
    records.sort(key=lambda r: r["trial"])

    params = spec.params()
    derived = {
        "tau": tau,
        "tau_n": tau * spec.n,
        "omega_size": spec.resolved_size() if spec.model == "fixed-size" else None,
        "a": params.a,
        "d": B.exponent_d(params) if params.nu > 3 else None,
        "n_is_pm1_mod6": B.is_pm1_mod6(spec.n),
    }
    lower = None
    if params.nu > 3 and (spec.acknowledge_mod6 or B.is_pm1_mod6(spec.n)):
        raw = B.bound_t2_failure_raw(params, tau, acknowledge_mod6=True)
        lower = 1.0 - min(1.0, raw)
        derived.update(failure_bound_raw=raw, failure_bound_clamped=raw > 1.0)
    derived["success_lower_bound"] = lower

    checks = {}
    for name in spec.checks:
        done = len(records)
        wins = sum(1 for r in records if r[name])
        lo, hi = wilson_interval(wins, done) if done else (0.0, 1.0)
        consistent = not (lower is not None and lower > 0 and hi < lower)
        checks[name] = {
            "successes": wins,
            "trials": done,
            "frequency": wins / done if done else None,
            "wilson_low": lo,
            "wilson_high": hi,
            "theoretical_lower_bound": lower,
            "consistent": consistent,
        }
    return {
        "spec": asdict(spec) | {"checks": list(spec.checks)},
        "derived": derived,
        "checks": checks,
        "consistent": all(c["consistent"] for c in checks.values()),
        "interrupted": interrupted,
        "trials_completed": len(records),
        "records": records,
        "timing": {"wall_seconds": time.perf_counter() - t_start, "jobs": jobs},
    }


CSV_COLUMNS = ["trial", "omega_size", "coherence", "iv", "iii", "on_margin", "off_margin",
               "ii-falsify", "ii_min_slack", "recovery", "recovery_error", "converged"]


def report_to_csv(report: dict) -> str:
    """One row per trial, fixed column order; absent fields are blank."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for rec in report["records"]:
        w.writerow({k: ("" if rec.get(k) is None else rec.get(k)) for k in CSV_COLUMNS})
    return buf.getvalue()


_num_or_null = {"type": ["number", "null"]}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["spec", "derived", "checks", "consistent", "interrupted",
                 "trials_completed", "records", "timing"],
    "properties": {
        "spec": {
            "type": "object",
            "required": ["n", "t_sparsity", "c", "nu", "mu", "alpha", "model", "trials", "seed", "checks"],
            "properties": {
                "n": {"type": "integer", "minimum": 2},
                "t_sparsity": {"type": "integer", "minimum": 1},
                "model": {"enum": list(MODELS)},
                "trials": {"type": "integer", "minimum": 1},
                "checks": {"type": "array", "minItems": 1, "items": {"enum": list(CHECKS)}},
            },
        },
        "derived": {
            "type": "object",
            "required": ["tau", "tau_n", "success_lower_bound"],
            "properties": {"tau": {"type": "number"}, "success_lower_bound": _num_or_null},
        },
        "checks": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["successes", "trials", "frequency", "wilson_low", "wilson_high",
                             "theoretical_lower_bound", "consistent"],
                "properties": {
                    "successes": {"type": "integer", "minimum": 0},
                    "trials": {"type": "integer", "minimum": 0},
                    "frequency": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                    "wilson_low": {"type": "number", "minimum": 0, "maximum": 1},
                    "wilson_high": {"type": "number", "minimum": 0, "maximum": 1},
                    "theoretical_lower_bound": _num_or_null,
                    "consistent": {"type": "boolean"},
                },
            },
        },
        "consistent": {"type": "boolean"},
        "interrupted": {"type": "boolean"},
        "trials_completed": {"type": "integer", "minimum": 0},
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["trial", "omega_size"],
                "properties": {"trial": {"type": "integer"}, "omega_size": {"type": "integer"}},
            },
        },
        "timing": {"type": "object"},
    },
}


# -- exhaustive small-N verification ---------------------------------------------

def _recovery_sweep(n, t, masks, amplitudes_per_support, rng, tol, batch=20000):
    """Recover every t-sparse signal (random amplitudes) for every mask; return failures."""
    supports = np.array(list(itertools.combinations(range(n), t)), dtype=np.int64)
    n_masks, n_sup, reps = masks.shape[0], supports.shape[0], amplitudes_per_support
    total = n_masks * n_sup * reps
    failures = []
    checked = 0
    worst = 0.0
    for start in range(0, total, batch):
        flat = np.arange(start, min(start + batch, total))
        mi, rest = np.divmod(flat, n_sup * reps)
        si = rest // reps
        x = np.zeros((flat.size, n), dtype=np.complex128)
        amps = rng.standard_normal((flat.size, t)) + 1j * rng.standard_normal((flat.size, t))
        np.put_along_axis(x, supports[si], amps, axis=1)
        spec = np.fft.fft(x, axis=1, norm="ortho")
        sol, _, _, conv = douglas_rachford(spec, masks[mi])
        err = np.abs(sol - x).max(axis=1)
        worst = max(worst, float(err.max()))
        bad = ~conv | (err >= tol)
        for j in np.flatnonzero(bad):
            failures.append({
                "n": n, "t": t,
                "omega": [int(w) for w in np.flatnonzero(masks[mi[j]])],
                "support": [int(s) for s in supports[si[j]]],
                "amplitudes_re": [float(v) for v in amps[j].real],
                "amplitudes_im": [float(v) for v in amps[j].imag],
                "error": float(err[j]),
                "converged": bool(conv[j]),
            })
        checked += flat.size
    return checked, worst, failures


def verify_small_n(n_max: int, t_max: int, ns=None, recovery: bool = True,
                   amplitudes_per_support: int = 10, seed: int = 0,
                   tol: float = DEFAULT_RECOVERY_TOL) -> dict:
    """Enumerate every frequency set of Z_N for each N and check, for T <= t_max:

    * every set satisfying condition (iv) has at least ``4T^2 N/(N+4T^2-1)`` members;
    * (optionally) every T-sparse signal is recovered exactly from such a set.

    ``ns`` restricts the group orders (default ``1..n_max``).
    """
    if n_max > SMALL_N_MAX:
        raise ValueError(f"n_max must be <= {SMALL_N_MAX} (exhaustive 2^N enumeration)")
    if n_max < 1 or t_max < 1:
        raise ValueError("n_max and t_max must be >= 1")
    ns = list(range(1, n_max + 1)) if ns is None else [int(v) for v in ns]
    if any(v > n_max or v < 1 for v in ns):
        raise ValueError(f"group orders must lie in 1..{n_max}")
    rng = np.random.default_rng(seed)
    rows, bound_violations, recovery_failures = [], [], []
    for n in ns:
        masks = enumerate_frequency_sets(n)
        sizes = masks.sum(axis=1)
        for t in range(1, t_max + 1):
            if t > n:
                continue
            ok = iv_holds_batch(masks, t)
            lb = cardinality_lower_bound(n, t)
            need = math.ceil(lb - 1e-12)
            low = ok & (sizes < need)
            for m in masks[low]:
                bound_violations.append({"n": n, "t": t, "omega": [int(w) for w in np.flatnonzero(m)],
                                         "size": int(m.sum()), "lower_bound": lb})
            row = {"n": n, "t": t, "subsets": int(masks.shape[0]), "iv_sets": int(ok.sum()),
                   "bound4": lb, "bound4_min_size": need,
                   "min_iv_size": int(sizes[ok].min()) if ok.any() else None,
                   "bound4_violations": int(low.sum())}
            if recovery and ok.any():
                checked, worst, fails = _recovery_sweep(n, t, masks[ok], amplitudes_per_support, rng, tol)
                recovery_failures.extend(fails)
                row.update(recoveries=checked, recovery_failures=len(fails), worst_error=worst)
            rows.append(row)
    return {
        "n_max": n_max,
        "t_max": t_max,
        "rows": rows,
        "bound4_violations": bound_violations,
        "recovery_failures": recovery_failures,
        "ok": not bound_violations and not recovery_failures,
    }


# -- worked example ------------------------------------------------------------------

WORKED_EXAMPLE = {"n": 1001, "t_sparsity": 2, "c": 2.0, "nu": 10}


def reproduce_worked_example(trials: int = 2000, seed: int = 0, jobs: int = 1,
                            bernoulli: bool = True) -> dict:
    """Recompute the N=1001, T=2, C=2, nu=10 example and compare with the claims."""
    p = B.BoundParams(WORKED_EXAMPLE["n"], WORKED_EXAMPLE["t_sparsity"], WORKED_EXAMPLE["c"], WORKED_EXAMPLE["nu"])
    tau = B.tune_tau_t2(p.n, p.t_sparsity, p.c)
    budget = B.budget_from_tau(tau, p.n)
    d = B.exponent_d(p)
    fail = B.bound_t2_failure(p, tau)
    lb4 = cardinality_lower_bound(p.n, p.t_sparsity)
    fixed = run_campaign(CampaignSpec(p.n, p.t_sparsity, p.c, p.nu, model="fixed-size", trials=trials,
                                      seed=seed, checks=("iv",), omega_size=budget), jobs=jobs)
    emp = fixed["checks"]["iv"]
    rows = [
        {"quantity": "tau*N", "claim": "|Omega| = 222 after rounding", "value": tau * p.n,
         "agrees": 221.0 <= tau * p.n <= 221.2},
        {"quantity": "budget ceil(tau*N)", "claim": 222, "value": budget, "agrees": budget == 222},
        {"quantity": "exponent d", "claim": "> 0", "value": d, "agrees": abs(d - 0.3999) <= 2e-4},
        {"quantity": "failure bound nu*N^-d", "claim": "< 2/3", "value": fail, "agrees": fail < 2 / 3},
        {"quantity": "success lower bound", "claim": "> 1/3", "value": 1 - fail,
         "agrees": 0.36 <= 1 - fail <= 0.38},
        {"quantity": "cardinality lower bound, min |Omega|", "claim": 16, "value": math.ceil(lb4),
         "agrees": math.ceil(lb4) == 16},
        {"quantity": "empirical P(iv), fixed size", "claim": "> 1/3 (refined: 3/4)",
         "value": emp["frequency"], "interval": [emp["wilson_low"], emp["wilson_high"]],
         "agrees": emp["frequency"] > 1 / 3 and emp["consistent"]},
        {"quantity": "CRT budget, delta=0.1", "claim": "reference", "value": B.crt_reference_size(p.n, 2, 0.1),
         "agrees": True},
    ]
    out = {"params": asdict(p), "rows": rows, "fixed_size_campaign": _summary(fixed)}
    if bernoulli:
        bern = run_campaign(CampaignSpec(p.n, p.t_sparsity, p.c, p.nu, model="bernoulli", trials=trials,
                                         seed=seed, checks=("iv",)), jobs=jobs)
        b = bern["checks"]["iv"]
        rows.append({"quantity": "empirical P(iv), Bernoulli", "claim": "> 1/3", "value": b["frequency"],
                     "interval": [b["wilson_low"], b["wilson_high"]],
                     "agrees": b["frequency"] > 1 / 3 and b["consistent"]})
        out["bernoulli_campaign"] = _summary(bern)
    out["ok"] = all(r["agrees"] for r in rows)
    return out


def _summary(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in ("records", "timing")}


reproduce_paper_example = reproduce_worked_example
