"""Minimal l1 extrapolation of a partial spectrum (basis pursuit on Z_N).

Given ``xhat`` on a frequency set ``omega``, find the ``y`` of least
``sum_t |y(t)|`` whose spectrum agrees with ``xhat`` on ``omega``. The solver is
Douglas-Rachford splitting between the l1 norm (prox = complex soft threshold)
and the affine constraint set (exact projection: overwrite the observed
frequencies and transform back).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fourier import CyclicSignal, SupportSet, dft_array, idft_array
from .kernel import STRICT_RTOL, FrequencySet

__all__ = [
    "RecoveryProblem",
    "RecoveryResult",
    "RecoveryCheck",
    "NullspaceVerdict",
    "SolverDidNotConverge",
    "soft_threshold",
    "douglas_rachford",
    "minimal_extrapolation",
    "check_exact_recovery",
    "nullspace_falsifier",
    "DEFAULT_TOL",
    "DEFAULT_RECOVERY_TOL",
    "DEFAULT_MAX_ITER",
]

DEFAULT_TOL = 1e-9
DEFAULT_RECOVERY_TOL = 1e-5
DEFAULT_MAX_ITER = 20000


class SolverDidNotConverge(RuntimeError):
    """Raised when an exactness verdict is requested from a non-converged solve."""

    def __init__(self, result: "RecoveryResult"):
        super().__init__(
            f"solver stopped after {result.iterations} iterations "
            f"with residual {result.residual:.3e}"
        )
        self.result = result


@dataclass(frozen=True)
class RecoveryProblem:
    """Observed spectrum ``observed[i] = xhat(omega.members[i])``."""

    omega: FrequencySet
    observed: np.ndarray = field(repr=False)

    def __post_init__(self):
        obs = np.array(self.observed, dtype=np.complex128).reshape(-1)
        if obs.shape[0] != len(self.omega):
            raise ValueError(
                f"need one observation per frequency ({len(self.omega)}), got {obs.shape[0]}"
            )
        if not np.all(np.isfinite(obs)):
            raise ValueError("observations must be finite")
        obs.setflags(write=False)
        object.__setattr__(self, "observed", obs)

    @property
    def n(self) -> int:
        return self.omega.n

    @classmethod
    def from_signal(cls, x: CyclicSignal, omega: FrequencySet) -> RecoveryProblem:
        if x.n != omega.n:
            raise ValueError("signal and frequency set live on different groups")
        spec = dft_array(x.values)
        return cls(omega, spec[list(omega.members)])

    def full_spectrum(self) -> np.ndarray:
        """Length-N spectrum with observed values on omega and zeros elsewhere."""
        spec = np.zeros(self.n, dtype=np.complex128)
        spec[list(self.omega.members)] = self.observed
        return spec

    # JSON: {"n", "omega", "re", "im"}, observations aligned with omega order
    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "omega": [int(w) for w in self.omega.members],
            "re": [float(v) for v in self.observed.real],
            "im": [float(v) for v in self.observed.imag],
        }

    @classmethod
    def from_dict(cls, data: dict) -> RecoveryProblem:
        n = int(data["n"])
        omega_raw = [int(w) for w in data["omega"]]
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if not (len(omega_raw) == re.shape[0] == im.shape[0]):
            raise ValueError("'omega', 're' and 'im' must have equal length")
        if len(set(w % n for w in omega_raw)) != len(omega_raw):
            raise ValueError("duplicate frequencies in 'omega'")
        # FrequencySet sorts its members; carry the observations along
        order = np.argsort([w % n for w in omega_raw], kind="stable")
        omega = FrequencySet(n, tuple(omega_raw))
        return cls(omega, (re + 1j * im)[order])


@dataclass(frozen=True)
class RecoveryResult:
    solution: CyclicSignal
    l1_norm: float
    iterations: int
    residual: float
    converged: bool

    def to_dict(self) -> dict:
        d = self.solution.to_dict()
        d.update(
            l1_norm=self.l1_norm,
            iterations=self.iterations,
            residual=self.residual,
            converged=self.converged,
        )
        return d


def soft_threshold(v: np.ndarray, theta: float) -> np.ndarray:
    """Shrink moduli by ``theta`` and keep phases: ``max(|v| - theta, 0) * v / |v|``."""
    mod = np.abs(v)
    gain = np.maximum(mod - theta, 0.0) / np.where(mod > 0, mod, 1.0)
    return v * gain


def douglas_rachford(spectra, masks, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, step=1.0):
    """Batched solver for ``min ||y||_1`` s.t. ``dft(y)[mask] = spectra[mask]``.

    Parameters
    ----------
    spectra : complex array, shape (B, N)
        Target spectra; entries outside the masks are ignored.
    masks : bool array, shape (B, N) or (N,)
        Observed frequencies of each problem.
    tol : float
        Absolute tolerance on both the constraint residual of the prox
        iterate and its change between successive steps.
    max_iter : int
    step : float
        Soft-threshold level, applied after normalising each problem so its
        observed spectrum has unit l2 norm. This makes the iterate path
        equivariant under complex scaling of the data.

    Returns
    -------
    solutions, iterations, residuals, converged : arrays with leading dim B
        Each solution is the final prox iterate projected onto the constraint
        set, so it is feasible to rounding error even when not converged;
        ``residuals`` are measured on the returned solutions.
    """
    spectra = np.atleast_2d(np.asarray(spectra, dtype=np.complex128))
    B, n = spectra.shape
    masks = np.broadcast_to(np.asarray(masks, dtype=bool), (B, n))

    b = np.where(masks, spectra, 0)
    scale = np.linalg.norm(b, axis=1)

    sol = np.zeros((B, n), dtype=np.complex128)
    iters = np.zeros(B, dtype=np.int64)
    resid = np.zeros(B)
    conv = np.zeros(B, dtype=bool)

    # zero data: y = 0 is feasible and minimal
    trivial = scale == 0
    conv[trivial] = True
    # full mask: the constraints pin y down
    full = masks.all(axis=1) & ~trivial
    if full.any():
        sol[full] = idft_array(b[full])
        resid[full] = np.abs(dft_array(sol[full]) - b[full]).max(axis=1)
        iters[full] = 1
        conv[full] = True

    idx = np.flatnonzero(~(trivial | full))
    if idx.size == 0:
        return sol, iters, resid, conv

    m = masks[idx]
    s = scale[idx][:, None]
    bb = b[idx] / s
    zhat = bb.copy()
    z = idft_array(zhat)
    y_prev = z.copy()
    y = z
    k = 0
    while idx.size and k < max_iter:
        k += 1
        xhat = np.where(m, bb, zhat)
        x = idft_array(xhat)
        y = soft_threshold(2 * x - z, step)
        yhat = dft_array(y)
        res = np.where(m, np.abs(yhat - bb), 0).max(axis=1) * s[:, 0]
        change = np.abs(y - y_prev).max(axis=1) * s[:, 0]
        z = z + (y - x)
        zhat = zhat + (yhat - xhat)
        y_prev = y

        done = (res < tol) & (change < tol)
        if done.any():
            sel = idx[done]
            sol[sel] = _project(y[done], m[done], bb[done]) * s[done]
            iters[sel] = k
            conv[sel] = True
            keep = ~done
            idx, m, s, bb = idx[keep], m[keep], s[keep], bb[keep]
            z, zhat, y_prev, y = z[keep], zhat[keep], y_prev[keep], y[keep]

    if idx.size:
        # out of iterations: hand back the last prox iterate, made feasible
        sol[idx] = _project(y, m, bb) * s
        iters[idx] = k
    done_rows = ~(trivial | full)
    resid[done_rows] = np.where(masks[done_rows], np.abs(dft_array(sol[done_rows]) - b[done_rows]), 0).max(axis=1)
    return sol, iters, resid, conv


def _project(y, m, bb):
    """Nearest point to ``y`` whose spectrum equals ``bb`` on the mask."""
    return idft_array(np.where(m, bb, dft_array(y)))


def minimal_extrapolation(problem: RecoveryProblem, tol: float = DEFAULT_TOL,
                          max_iter: int = DEFAULT_MAX_ITER) -> RecoveryResult:
    """Least-l1 signal whose spectrum matches ``problem.observed`` on ``problem.omega``.

    On non-convergence the result carries ``converged=False`` and the last
    iterate; nothing is raised here.
    """
    if len(problem.omega) == 0:
        raise ValueError("empty frequency set: nothing to extrapolate from")
    if tol <= 0:
        raise ValueError("tol must be positive")
    sol, iters, resid, conv = douglas_rachford(
        problem.full_spectrum()[None, :], problem.omega.indicator(), tol, max_iter
    )
    y = CyclicSignal(problem.n, sol[0])
    return RecoveryResult(y, y.l1_norm(), int(iters[0]), float(resid[0]), bool(conv[0]))


@dataclass(frozen=True)
class RecoveryCheck:
    exact: bool
    error: float
    result: RecoveryResult

    def __bool__(self) -> bool:
        return self.exact


def check_exact_recovery(x: CyclicSignal, omega: FrequencySet, tol: float = DEFAULT_RECOVERY_TOL,
                         solver_tol: float = DEFAULT_TOL,
                         max_iter: int = DEFAULT_MAX_ITER) -> RecoveryCheck:
    """Recover ``x`` from ``dft(x)`` restricted to ``omega``; exact iff sup error < tol."""
    result = minimal_extrapolation(RecoveryProblem.from_signal(x, omega), solver_tol, max_iter)
    if not result.converged:
        raise SolverDidNotConverge(result)
    err = float(np.abs(result.solution.values - x.values).max())
    return RecoveryCheck(err < tol, err, result)


@dataclass(frozen=True)
class NullspaceVerdict:
    status: str  # "violated" | "no violation found" | "vacuously true"
    witness: Optional[CyclicSignal]
    min_slack: Optional[float]
    trials: int

    @property
    def violated(self) -> bool:
        return self.status == "violated"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "min_slack": self.min_slack,
            "trials": self.trials,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


def nullspace_falsifier(omega: FrequencySet, support: SupportSet, trials: int,
                        seed: int = 0) -> NullspaceVerdict:
    """Search for ``z != 0`` with ``zhat = 0`` on omega and at least half its l1 mass on S.

    Half of the samples have i.i.d. complex Gaussian spectra on the complement
    of omega; the other half project random vectors carried by S onto the null
    space, which probes the directions most likely to break the inequality.
    A clean run proves nothing; a hit disproves the null-space property.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if support.n != omega.n:
        raise ValueError("support and frequency set live on different groups")
    n = omega.n
    if omega.is_full():
        return NullspaceVerdict("vacuously true", None, None, trials)

    rng = np.random.default_rng(seed)
    free = ~omega.indicator()
    on_s = support.indicator()
    s_idx = np.flatnonzero(on_s)

    n_gauss = (trials + 1) // 2
    spec = np.zeros((trials, n), dtype=np.complex128)
    g = rng.standard_normal((n_gauss, n)) + 1j * rng.standard_normal((n_gauss, n))
    spec[:n_gauss] = np.where(free, g, 0)
    n_proj = trials - n_gauss
    if n_proj:
        v = np.zeros((n_proj, n), dtype=np.complex128)
        if s_idx.size:
            v[:, s_idx] = rng.standard_normal((n_proj, s_idx.size)) + 1j * rng.standard_normal((n_proj, s_idx.size))
        else:
            v = rng.standard_normal((n_proj, n)) + 1j * rng.standard_normal((n_proj, n))
        spec[n_gauss:] = np.where(free, dft_array(v), 0)

    z = idft_array(spec)
    mods = np.abs(z)
    total = mods.sum(axis=1)
    usable = total > 1e-12 * np.sqrt(n)
    slack = np.full(trials, np.inf)
    slack[usable] = (mods[usable][:, ~on_s].sum(axis=1) - mods[usable][:, on_s].sum(axis=1)) / total[usable]
    j = int(np.argmin(slack))
    min_slack = float(slack[j])
    witness = CyclicSignal(n, z[j] / total[j]) if np.isfinite(min_slack) else None
    if min_slack <= STRICT_RTOL:
        return NullspaceVerdict("violated", witness, min_slack, trials)
    return NullspaceVerdict("no violation found", witness, min_slack, trials)
