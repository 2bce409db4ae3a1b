"""Complex functions on the cyclic group Z_N and their unitary Fourier transform.

Conventions: ``<w, t> = e(w t / N)`` with ``e(s) = exp(2 pi i s)``, and

    xhat(w) = N**-0.5 * sum_t x(t) e(-w t / N)
    x(t)    = N**-0.5 * sum_w xhat(w) e(w t / N)

so both directions are unitary. Every other module relies on this.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "CyclicSignal",
    "SupportSet",
    "dft",
    "idft",
    "dft_array",
    "idft_array",
    "direct_dft",
    "direct_idft",
    "reduce_residues",
]


def reduce_residues(indices: Iterable[int], n: int) -> np.ndarray:
    """Reduce integer indices mod ``n`` into ``0..n-1`` (negatives allowed)."""
    if n <= 0:
        raise ValueError(f"group order must be positive, got {n}")
    arr = np.asarray(list(indices), dtype=np.int64)
    return np.mod(arr, n)


@dataclass(frozen=True)
class CyclicSignal:
    """A complex function on Z_N, stored as ``values[t]`` for ``t = 0..n-1``."""

    n: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"group order must be positive, got {self.n}")
        vals = np.array(self.values, dtype=np.complex128).reshape(-1)
        if vals.shape[0] != self.n:
            raise ValueError(f"expected {self.n} values, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("signal values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, n: int) -> CyclicSignal:
        return cls(n, np.zeros(n, dtype=np.complex128))

    @classmethod
    def impulse(cls, n: int, at: int = 0, amplitude: complex = 1.0) -> CyclicSignal:
        vals = np.zeros(n, dtype=np.complex128)
        vals[at % n] = amplitude
        return cls(n, vals)

    @classmethod
    def sparse(cls, n: int, support: Iterable[int], amplitudes: Iterable[complex]) -> CyclicSignal:
        vals = np.zeros(n, dtype=np.complex128)
        idx = reduce_residues(support, n)
        vals[idx] = np.asarray(list(amplitudes), dtype=np.complex128)
        return cls(n, vals)

    def __getitem__(self, t: int) -> complex:
        return complex(self.values[t % self.n])

    def __len__(self) -> int:
        return self.n

    def shift(self, s: int) -> CyclicSignal:
        """Return ``t -> x(t - s)``."""
        return CyclicSignal(self.n, np.roll(self.values, s % self.n))

    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum())

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def support(self, atol: float = 0.0) -> SupportSet:
        return SupportSet(self.n, np.flatnonzero(np.abs(self.values) > atol))

    # -- JSON: {"n": int, "re": [...], "im": [...]}
    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "re": [float(v) for v in self.values.real],
            "im": [float(v) for v in self.values.imag],
        }

    @classmethod
    def from_dict(cls, data: dict) -> CyclicSignal:
        n = int(data["n"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise ValueError("'re' and 'im' must have equal length")
        return cls(n, re + 1j * im)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> CyclicSignal:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SupportSet:
    """Sorted set of distinct residues of Z_N (the support S, with T = len)."""

    n: int
    members: tuple = ()

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"group order must be positive, got {self.n}")
        raw = [int(m) for m in np.asarray(self.members).reshape(-1)]
        red = sorted(set(m % self.n for m in raw))
        if len(red) != len(raw):
            raise ValueError("support members must be distinct residues")
        object.__setattr__(self, "members", tuple(red))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, t: int) -> bool:
        return (t % self.n) in self.members

    def indicator(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.members)] = True
        return mask

    def complement(self) -> SupportSet:
        inside = set(self.members)
        return SupportSet(self.n, tuple(t for t in range(self.n) if t not in inside))


# -- transforms on raw arrays (last axis is the group axis) --------------------

def _fourier_matrix(n: int, sign: int) -> np.ndarray:
    # integer products reduced mod n before scaling keep phases accurate at large n
    k = np.arange(n, dtype=np.int64)
    phase = np.mod(np.outer(k, k), n) / n
    return np.exp(sign * 2j * np.pi * phase) / np.sqrt(n)


def direct_dft(values: np.ndarray) -> np.ndarray:
    """O(N^2) summation of the forward transform; the reference implementation."""
    values = np.asarray(values, dtype=np.complex128)
    n = values.shape[-1]
    if n == 0:
        raise ValueError("cannot transform an empty signal")
    return values @ _fourier_matrix(n, -1).T


def direct_idft(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.complex128)
    n = values.shape[-1]
    if n == 0:
        raise ValueError("cannot transform an empty signal")
    return values @ _fourier_matrix(n, +1).T


def dft_array(values: np.ndarray) -> np.ndarray:
    """Unitary forward transform along the last axis (fast path)."""
    values = np.asarray(values, dtype=np.complex128)
    if values.shape[-1] == 0:
        raise ValueError("cannot transform an empty signal")
    return np.fft.fft(values, axis=-1, norm="ortho")


def idft_array(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.complex128)
    if values.shape[-1] == 0:
        raise ValueError("cannot transform an empty signal")
    return np.fft.ifft(values, axis=-1, norm="ortho")


def dft(x: CyclicSignal, method: str = "fast") -> CyclicSignal:
    """Fourier transform ``xhat`` of ``x`` with 1/sqrt(N) normalization.

    ``method`` is ``"fast"`` (mixed-radix FFT, any N) or ``"direct"``.
    """
    fn = {"fast": dft_array, "direct": direct_dft}[method]
    return CyclicSignal(x.n, fn(x.values))


def idft(xhat: CyclicSignal, method: str = "fast") -> CyclicSignal:
    """Inverse of :func:`dft`."""
    fn = {"fast": idft_array, "direct": direct_idft}[method]
    return CyclicSignal(xhat.n, fn(xhat.values))
