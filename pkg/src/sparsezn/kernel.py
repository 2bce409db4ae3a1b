"""The idempotent kernel of a frequency set and the certificate conditions built on it.

For a frequency set ``omega`` the kernel is ``K(t) = sum_{w in omega} e(w t / N)``;
its spectrum is the indicator of ``omega`` (up to the sqrt(N) factor of the
unitary transform), hence the name. A small off-origin modulus
``max_{t != 0} |K(t)| < K(0) / (2T)`` guarantees that the interpolant

    p(t) = sum_{t' in S} lambda(t') K(t - t') / K(0)

is within 1/2 of any unimodular ``lambda`` on ``S`` and below 1/2 off ``S``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .fourier import CyclicSignal, SupportSet, dft_array, idft_array, reduce_residues

__all__ = [
    "FrequencySet",
    "IdempotentKernel",
    "Certificate",
    "ConditionIV",
    "STRICT_RTOL",
    "kernel",
    "check_condition_iv",
    "cardinality_lower_bound",
    "build_certificate",
    "check_condition_iii",
    "iv_holds_batch",
    "enumerate_frequency_sets",
]

# relative guard around the strict inequalities; ties count as failures
STRICT_RTOL = 1e-12
UNIMODULAR_TOL = 1e-12


@dataclass(frozen=True)
class FrequencySet:
    """A subset ``omega`` of Z_N used as the observed frequencies."""

    n: int
    members: tuple = ()

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"group order must be positive, got {self.n}")
        red = sorted(set(int(m) for m in reduce_residues(np.asarray(self.members).reshape(-1), self.n)))
        object.__setattr__(self, "members", tuple(red))

    @classmethod
    def full(cls, n: int) -> FrequencySet:
        return cls(n, tuple(range(n)))

    @classmethod
    def from_indicator(cls, mask: np.ndarray) -> FrequencySet:
        mask = np.asarray(mask, dtype=bool)
        return cls(mask.shape[0], tuple(np.flatnonzero(mask)))

    def cardinality(self) -> int:
        return len(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, w: int) -> bool:
        return (w % self.n) in self.members

    def indicator(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.members)] = True
        return mask

    def is_full(self) -> bool:
        return len(self.members) == self.n

    def to_dict(self) -> dict:
        return {"n": int(self.n), "omega": [int(m) for m in self.members]}

    @classmethod
    def from_dict(cls, data: dict) -> FrequencySet:
        return cls(int(data["n"]), tuple(int(w) for w in data["omega"]))


@dataclass(frozen=True)
class IdempotentKernel:
    n: int
    omega: FrequencySet
    values: np.ndarray = field(repr=False)
    k0: float
    max_off_origin: float
    argmax_off_origin: Optional[int]

    def __getitem__(self, t: int) -> complex:
        return complex(self.values[t % self.n])

    def as_signal(self) -> CyclicSignal:
        return CyclicSignal(self.n, self.values)

    def coherence(self) -> float:
        """``max_{t != 0} |K(t)| / K(0)``; ``inf`` for an empty frequency set."""
        return self.max_off_origin / self.k0 if self.k0 > 0 else math.inf


def _direct_kernel(omega: FrequencySet) -> np.ndarray:
    n = omega.n
    w = np.asarray(omega.members, dtype=np.int64)
    t = np.arange(n, dtype=np.int64)
    if w.size == 0:
        return np.zeros(n, dtype=np.complex128)
    phase = np.mod(np.outer(t, w), n) / n
    return np.exp(2j * np.pi * phase).sum(axis=1)


def kernel(omega: FrequencySet, method: str = "fast") -> IdempotentKernel:
    """Evaluate ``K(t) = sum_{w in omega} e(w t / N)`` at every ``t``.

    ``"fast"`` uses ``sqrt(N) * idft(1_omega)``; ``"direct"`` sums the characters.
    """
    n = omega.n
    if method == "fast":
        values = np.sqrt(n) * idft_array(omega.indicator().astype(np.complex128))
    elif method == "direct":
        values = _direct_kernel(omega)
    else:
        raise ValueError(f"unknown method {method!r}")
    # K(0) is an exact count; don't let rounding leak into it
    values[0] = float(len(omega))
    values.setflags(write=False)
    if n > 1:
        mods = np.abs(values[1:])
        j = int(np.argmax(mods))
        max_off, arg = float(mods[j]), j + 1
    else:
        max_off, arg = 0.0, None
    return IdempotentKernel(n, omega, values, float(len(omega)), max_off, arg)


@dataclass(frozen=True)
class ConditionIV:
    """Verdict of ``max_{t != 0} |K(t)| < K(0) / (2T)``.

    Truthy iff the condition holds. ``witness`` is a ``t != 0`` where it fails.
    """

    holds: bool
    witness: Optional[int]
    max_off_origin: float
    threshold: float
    boundary: bool = False

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "witness": self.witness,
            "max_off_origin": self.max_off_origin,
            "threshold": self.threshold,
            "boundary": self.boundary,
        }


def _strictly_less(lhs, rhs):
    """Elementwise ``lhs < rhs`` with ties (within STRICT_RTOL) counted as failures."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    tie = np.abs(lhs - rhs) <= STRICT_RTOL * np.maximum(np.abs(rhs), np.abs(lhs))
    return (lhs < rhs) & ~tie, tie


def check_condition_iv(k: IdempotentKernel, t_sparsity: int) -> ConditionIV:
    if t_sparsity <= 0:
        raise ValueError(f"sparsity T must be >= 1, got {t_sparsity}")
    threshold = k.k0 / (2 * t_sparsity)
    if k.k0 <= 0:
        witness = 1 if k.n > 1 else None
        return ConditionIV(False, witness, k.max_off_origin, threshold)
    if k.argmax_off_origin is None:
        # Z_1: no t != 0, nothing to check
        return ConditionIV(True, None, 0.0, threshold)
    ok, tie = _strictly_less(k.max_off_origin, threshold)
    ok, tie = bool(ok), bool(tie)
    return ConditionIV(ok, None if ok else k.argmax_off_origin, k.max_off_origin, threshold, tie)


def cardinality_lower_bound(n: int, t_sparsity: int) -> float:
    """``4 T^2 N / (N + 4 T^2 - 1)``: no smaller frequency set can satisfy condition (iv).

    Follows from Parseval, ``sum_t |K(t)|^2 = N |omega|``.
    """
    if n < 1 or t_sparsity < 1:
        raise ValueError("need N >= 1 and T >= 1")
    q = 4 * t_sparsity**2
    return q * n / (n + q - 1)


@dataclass(frozen=True)
class Certificate:
    p: CyclicSignal
    support: SupportSet
    lam: np.ndarray = field(repr=False)
    on_margin: float
    off_margin: float
    omega: FrequencySet

    def spectrum_leak(self) -> float:
        """Largest spectral modulus of ``p`` outside the frequency set."""
        spec = dft_array(self.p.values)
        off = ~self.omega.indicator()
        return float(np.abs(spec[off]).max()) if off.any() else 0.0

    def to_dict(self) -> dict:
        return {
            "support": list(self.support.members),
            "lambda_re": [float(v) for v in self.lam.real],
            "lambda_im": [float(v) for v in self.lam.imag],
            "on_margin": self.on_margin,
            "off_margin": self.off_margin,
            "holds": check_condition_iii(self),
        }


def build_certificate(k: IdempotentKernel, support: SupportSet, lam: Iterable[complex]) -> Certificate:
    """Interpolate the sign pattern ``lam`` (aligned with ``support.members``) by shifted kernels."""
    if k.k0 <= 0:
        raise ValueError("empty frequency set: K(0) = 0")
    if support.n != k.n:
        raise ValueError("support and kernel live on different groups")
    lam = np.asarray(list(lam), dtype=np.complex128)
    if lam.shape[0] != len(support):
        raise ValueError(f"need {len(support)} lambda values, got {lam.shape[0]}")
    if lam.size and np.max(np.abs(np.abs(lam) - 1.0)) > UNIMODULAR_TOL:
        raise ValueError("lambda must be unimodular on the support")
    p = np.zeros(k.n, dtype=np.complex128)
    for t0, l0 in zip(support.members, lam):
        p += l0 * np.roll(k.values, t0)
    p /= k.k0
    on_s = support.indicator()
    idx = np.asarray(support.members, dtype=np.int64)
    on_margin = float(np.abs(p[idx] - lam).max()) if idx.size else 0.0
    off_margin = float(np.abs(p[~on_s]).max()) if (~on_s).any() else 0.0
    return Certificate(CyclicSignal(k.n, p), support, lam, on_margin, off_margin, k.omega)


def check_condition_iii(cert: Certificate) -> bool:
    ok_on, _ = _strictly_less(cert.on_margin, 0.5)
    ok_off, _ = _strictly_less(cert.off_margin, 0.5)
    return bool(ok_on and ok_off)


# -- exhaustive helpers ----------------------------------------------------------

def enumerate_frequency_sets(n: int) -> np.ndarray:
    """All ``2**n`` indicator vectors of subsets of Z_n, as a boolean array."""
    if n > 20:
        raise ValueError("refusing to enumerate more than 2**20 subsets")
    codes = np.arange(2**n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


def iv_holds_batch(masks: np.ndarray, t_sparsity: int) -> np.ndarray:
    """Vectorised :func:`check_condition_iv` over rows of an indicator array."""
    masks = np.asarray(masks, dtype=bool)
    n = masks.shape[-1]
    k0 = masks.sum(axis=-1).astype(float)
    if n == 1:
        return k0 > 0
    K = np.sqrt(n) * idft_array(masks.astype(np.complex128))
    max_off = np.abs(K[..., 1:]).max(axis=-1)
    ok, _ = _strictly_less(max_off, k0 / (2 * t_sparsity))
    return ok & (k0 > 0)
