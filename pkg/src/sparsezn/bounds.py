"""Random frequency selection and closed-form failure-probability bounds.

Two selection models are supported: Bernoulli (each residue kept independently
with probability ``tau``) and fixed size (a uniform subset of given
cardinality). All logarithms are natural.

Bound evaluators return a probability clamped to ``[0, 1]``; the ``*_raw``
variants return the unclamped right-hand sides, which routinely exceed 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .kernel import FrequencySet, cardinality_lower_bound

__all__ = [
    "BernoulliConfig",
    "BoundParams",
    "trial_rng",
    "sample_omega",
    "sample_omega_fixed",
    "is_pm1_mod6",
    "tune_tau_t2",
    "tune_tau_t3",
    "budget_from_tau",
    "exponent_d",
    "bound_t2_failure",
    "bound_t2_failure_raw",
    "bound_t3_failure",
    "bound_t3_failure_raw",
    "explicit_t3_level",
    "corollary_t2_c_threshold",
    "corollary_t3_delta_max",
    "crt_reference_size",
    "chernoff_diagnostic",
    "bound_report",
]


@dataclass(frozen=True)
class BernoulliConfig:
    n: int
    tau: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"group order must be positive, got {self.n}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")


@dataclass(frozen=True)
class BoundParams:
    """Scalar inputs of the bounds. ``nu`` discretises the circle of phases in the
    T2 argument; ``mu`` and ``alpha`` only enter the T3 bound."""

    n: float
    t_sparsity: int
    c: float
    nu: int = 10
    mu: int = 10
    alpha: float = 2.0 / 3.0
    delta: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"N must be >= 1, got {self.n}")
        if self.t_sparsity < 1:
            raise ValueError(f"T must be >= 1, got {self.t_sparsity}")
        if self.t_sparsity > self.n:
            raise ValueError(f"T = {self.t_sparsity} exceeds N = {self.n}")
        if self.c <= 0:
            raise ValueError(f"C must be positive, got {self.c}")
        if int(self.nu) != self.nu or self.nu <= 1:
            raise ValueError(f"nu must be an integer > 1, got {self.nu}")
        if int(self.mu) != self.mu or self.mu <= 1:
            raise ValueError(f"mu must be an integer > 1, got {self.mu}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.delta is not None and self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def a(self) -> float:
        return math.cos(math.pi / self.nu)

    @property
    def alpha_prime(self) -> float:
        return self.alpha - 2.0 * math.sin(math.pi / (2 * self.mu))


# -- sampling ----------------------------------------------------------------------

def trial_rng(seed: int, trial: Optional[int] = None) -> np.random.Generator:
    """Generator for ``seed`` alone, or an independent stream for ``(seed, trial)``."""
    if trial is None:
        return np.random.default_rng(seed)
    return np.random.default_rng([seed, trial])


def sample_omega(config: BernoulliConfig, trial: Optional[int] = None) -> FrequencySet:
    rng = trial_rng(config.seed, trial)
    keep = rng.random(config.n) < config.tau
    return FrequencySet.from_indicator(keep)


def sample_omega_fixed(n: int, size: int, seed: int = 0, trial: Optional[int] = None) -> FrequencySet:
    """Uniformly random subset of Z_n with exactly ``size`` elements."""
    if not 0 <= size <= n:
        raise ValueError(f"size must lie in [0, {n}], got {size}")
    rng = trial_rng(seed, trial)
    return FrequencySet(n, tuple(rng.permutation(n)[:size]))


def is_pm1_mod6(n: int) -> bool:
    """``N = +-1 mod 6``, i.e. 2t and 3t are nonzero whenever t is."""
    return int(n) % 6 in (1, 5)


# -- tuning rules ------------------------------------------------------------------

def _tau(n, scale, c):
    if n < 2:
        raise ValueError(f"N must be >= 2, got {n}")
    if c <= 0:
        raise ValueError(f"C must be positive, got {c}")
    tau = 4.0 * c * scale * math.log(n) / n
    if tau >= 1.0:
        raise ValueError(f"tau = {tau:.4g} >= 1: parameters incompatible with Bernoulli selection")
    return tau


def tune_tau_t2(n, t_sparsity: int, c: float) -> float:
    """``tau`` with ``tau N = 4 C T^2 log N``."""
    if t_sparsity < 1:
        raise ValueError("T must be >= 1")
    return _tau(n, t_sparsity**2, c)


def tune_tau_t3(n, t_sparsity: int, c: float) -> float:
    """``tau`` with ``tau N = 4 C T log N``."""
    if t_sparsity < 1:
        raise ValueError("T must be >= 1")
    return _tau(n, t_sparsity, c)


def budget_from_tau(tau: float, n: int) -> int:
    """Fixed-size budget matching a Bernoulli rate: ``ceil(tau N)``."""
    return int(math.ceil(tau * n - 1e-9))


# -- T2 ------------------------------------------------------------------------

def exponent_d(params: BoundParams) -> float:
    """``d = C (a^2 - a^4 / T^2) - 1`` with ``a = cos(pi / nu)``."""
    if params.nu <= 3:
        raise ValueError(f"nu must exceed 3, got {params.nu}")
    a2 = params.a**2
    return params.c * (a2 - a2 * a2 / params.t_sparsity**2) - 1.0


def _check_mod6(n, acknowledge_mod6):
    if not acknowledge_mod6 and not is_pm1_mod6(n):
        raise ValueError(
            f"N = {n} is not +-1 mod 6; pass acknowledge_mod6=True to evaluate anyway"
        )


def bound_t2_failure_raw(params: BoundParams, tau: float, acknowledge_mod6: bool = False) -> float:
    """``N nu exp(tau N (-a^2/(4T^2) + a^4/(4T^4))) `` bounding ``1 - P(condition iv)``."""
    _check_mod6(params.n, acknowledge_mod6)
    if params.nu <= 3:
        raise ValueError(f"nu must exceed 3, got {params.nu}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    a2, t2 = params.a**2, params.t_sparsity**2
    log_val = (math.log(params.n) + math.log(params.nu)
               + tau * params.n * (-a2 / (4 * t2) + a2 * a2 / (4 * t2 * t2)))
    return math.exp(log_val) if log_val < 700 else math.inf


def bound_t2_failure(params: BoundParams, tau: float, acknowledge_mod6: bool = False) -> float:
    return min(1.0, bound_t2_failure_raw(params, tau, acknowledge_mod6))


def corollary_t2_c_threshold(t_sparsity: int) -> float:
    """Smallest C (exclusive) for which some nu makes ``exponent_d`` positive."""
    if t_sparsity < 1:
        raise ValueError("T must be >= 1")
    if t_sparsity == 1:
        return math.inf
    t2 = t_sparsity**2
    return t2 / (t2 - 1)


# -- T3 ------------------------------------------------------------------------

def bound_t3_failure_raw(params: BoundParams) -> float:
    """``T mu^T nu N^(-C a^2 a'^2) + (N - T) mu^T nu N^(-C a^2 (1 - alpha)^2)``."""
    ap = params.alpha_prime
    if ap <= 0:
        raise ValueError(f"alpha' = alpha - 2 sin(pi/(2 mu)) = {ap:.4g} must be positive")
    n, t, c, a2 = params.n, params.t_sparsity, params.c, params.a**2
    log_pre = t * math.log(params.mu) + math.log(params.nu)
    logn = math.log(n)
    terms = []
    if t > 0:
        terms.append(math.log(t) + log_pre - c * a2 * ap * ap * logn)
    if n - t > 0:
        terms.append(math.log(n - t) + log_pre - c * a2 * (1 - params.alpha) ** 2 * logn)
    if not terms:
        return 0.0
    top = max(terms)
    if top > 700:
        return math.inf
    return sum(math.exp(v) for v in terms)


def bound_t3_failure(params: BoundParams) -> float:
    return min(1.0, bound_t3_failure_raw(params))


def explicit_t3_level(n, t_sparsity: int, c: float) -> float:
    """The explicit choice ``10^(T+3) N^(1 - C/10)`` admissible for mu=10, nu=1000, alpha=2/3."""
    log_val = (t_sparsity + 3) * math.log(10.0) + (1.0 - c / 10.0) * math.log(n)
    return math.exp(log_val) if log_val < 700 else math.inf


def corollary_t3_delta_max(c: float) -> float:
    """Supremum of delta with ``h = O(N^-delta)`` under the T3 tuning: ``(C-1)^2 / (4C)``."""
    if c <= 1:
        raise ValueError(f"C must exceed 1, got {c}")
    return (c - 1.0) ** 2 / (4.0 * c)


def crt_reference_size(n, t_sparsity: int, delta: float) -> int:
    """Original sample budget ``floor(C T log N)`` with ``C = 22 (1 + delta)``."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if n < 2:
        raise ValueError(f"N must be >= 2, got {n}")
    return int(math.floor(22.0 * (1.0 + delta) * t_sparsity * math.log(n)))


# -- diagnostics -----------------------------------------------------------------

def chernoff_diagnostic(n: int, t_sparsity: int, tau: float, t: int, j: int, nu: int,
                        trials: int = 10000, seed: int = 0) -> dict:
    """Monte Carlo estimate of ``P(Re K(t) e^{-i phi} >= a K(0) / (2T))`` for one
    direction ``phi = 2 pi j / nu``, next to its exponential-moment bound
    ``prod_n (1 - tau + tau e^{u A_n})`` with ``u = a / T``."""
    if t % n == 0:
        raise ValueError("t must be nonzero mod N")
    a = math.cos(math.pi / nu)
    phi = 2 * math.pi * j / nu
    coef = np.cos(2 * np.pi * np.arange(n) * t / n - phi) - a / (2 * t_sparsity)
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = max(1, min(trials, 2_000_000 // max(n, 1)))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        X = rng.random((m, n)) < tau
        hits += int(((X * coef).sum(axis=1) >= 0).sum())
        done += m
    u = a / t_sparsity
    log_mgf = float(np.log1p(tau * np.expm1(u * coef)).sum())
    return {
        "empirical": hits / trials,
        "chernoff_bound": math.exp(log_mgf),
        "poisson_relaxation": math.exp(float(tau * np.expm1(u * coef).sum())),
        "trials": trials,
    }


def bound_report(kind: str, params: BoundParams, tau: Optional[float] = None,
                 acknowledge_mod6: bool = False) -> dict:
    """JSON-ready report for one evaluator: inputs, derived quantities, clamp flags."""
    report = {"kind": kind, "inputs": {k: v for k, v in asdict(params).items() if v is not None}}
    derived = {"a": params.a}
    if kind == "t2":
        tau = tune_tau_t2(params.n, params.t_sparsity, params.c) if tau is None else tau
        raw = bound_t2_failure_raw(params, tau, acknowledge_mod6)
        derived.update(
            tau=tau,
            tau_n=tau * params.n,
            budget=budget_from_tau(tau, params.n),
            d=exponent_d(params),
            nu_n_minus_d=params.nu * params.n ** (-exponent_d(params)),
            failure_raw=raw,
            failure=min(1.0, raw),
            clamped=raw > 1.0,
            success_lower_bound=1.0 - min(1.0, raw),
            c_threshold=corollary_t2_c_threshold(params.t_sparsity),
            n_is_pm1_mod6=is_pm1_mod6(params.n),
        )
    elif kind == "t3":
        raw = bound_t3_failure_raw(params)
        try:
            tau = tune_tau_t3(params.n, params.t_sparsity, params.c)
        except ValueError:
            tau = None  # tuning saturates: every frequency would be kept
        derived.update(
            alpha_prime=params.alpha_prime,
            tau=tau,
            tau_n=4 * params.c * params.t_sparsity * math.log(params.n),
            h_raw=raw,
            h=min(1.0, raw),
            clamped=raw > 1.0,
            delta_max=corollary_t3_delta_max(params.c) if params.c > 1 else None,
        )
        if params.mu == 10 and params.nu == 1000 and abs(params.alpha - 2 / 3) < 1e-12:
            derived["explicit_level"] = explicit_t3_level(params.n, params.t_sparsity, params.c)
    elif kind == "crt":
        delta = params.delta if params.delta is not None else 0.1
        derived = {
            "delta": delta,
            "c": 22.0 * (1.0 + delta),
            "size": crt_reference_size(params.n, params.t_sparsity, delta),
        }
    elif kind == "bound4":
        lb = cardinality_lower_bound(int(params.n), params.t_sparsity)
        derived = {"lower_bound": lb, "min_size": int(math.ceil(lb - 1e-12))}
    else:
        raise ValueError(f"unknown bound kind {kind!r}")
    report["derived"] = derived
    return report
