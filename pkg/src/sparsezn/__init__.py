"""Sparse recovery on the cyclic group Z_N from few Fourier coefficients.

Submodules: ``fourier`` (signals and the unitary DFT), ``kernel`` (idempotent
kernels, the coherence condition and dual certificates), ``recovery``
(l1 minimal extrapolation), ``bounds`` (random frequency selection and the
probability bounds) and ``experiments`` (Monte Carlo campaigns).
"""

from .bounds import BernoulliConfig, BoundParams, sample_omega
from .fourier import CyclicSignal, SupportSet, dft, idft
from .kernel import (
    FrequencySet,
    build_certificate,
    check_condition_iii,
    check_condition_iv,
    kernel,
)
from .recovery import RecoveryProblem, check_exact_recovery, minimal_extrapolation

__version__ = "0.1.0"

__all__ = [
    "BernoulliConfig",
    "BoundParams",
    "CyclicSignal",
    "FrequencySet",
    "RecoveryProblem",
    "SupportSet",
    "build_certificate",
    "check_condition_iii",
    "check_condition_iv",
    "check_exact_recovery",
    "dft",
    "idft",
    "kernel",
    "minimal_extrapolation",
    "sample_omega",
]
