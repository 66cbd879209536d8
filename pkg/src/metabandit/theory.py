"""Computable theory artifacts: the context-richness constant, the regret
bound constants and right-hand sides, and numeric checks of the
eigenvalue-sum and posterior-width inequalities on simulated trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import GaussianBelief, HistoryEntry, RoundContexts
from .linalg import inv_pd, symmetrize

EIGEN_ZERO_TOL = 1e-10
ASSUMPTION_TOL = 1e-9
EXACT_BUDGET = 10**6


class PreconditionError(ValueError):
    """An operation's stated precondition does not hold; the message names
    the failed condition."""


@dataclass(frozen=True)
class AssumptionParams:
    """Growth constant for the minimum eigenvalue of the design precision.

    ``vartheta = min(rho_min, lambda_min_B1) / (4 * window)``; undefined
    (None) when every window admits a rank-deficient arm sequence.
    """

    window: int
    rho_min: float
    lambda_min_B1: float
    vartheta: float | None
    is_estimate: bool = False
    sequences_checked: int = 0

    def __post_init__(self):
        if self.rho_min > 0 and not (self.vartheta and self.vartheta > 0):
            raise ValueError("vartheta must be positive when rho_min is positive")


def _window_min_eig_exact(outers: list[np.ndarray]) -> tuple[float, int]:
    """Minimum eigenvalue over every arm sequence of one window.

    ``outers[j]`` holds the (k, d, d) per-arm outer products of round j.
    Builds the k^window batch of Gram sums by broadcasting and runs one
    batched eigendecomposition.
    """
    acc = outers[0]
    for block in outers[1:]:
        acc = acc[:, None] + block[None, :]
        acc = acc.reshape(-1, *acc.shape[-2:])
    eigs = np.linalg.eigvalsh(acc)
    return float(eigs[:, 0].min()), acc.shape[0]


def estimate_vartheta(
    context_source: Callable[[int], RoundContexts],
    n: int,
    window: int,
    b1: np.ndarray,
    mode: str = "exact",
    rng: np.random.Generator | None = None,
    samples: int = 10_000,
) -> AssumptionParams:
    """Evaluate the richness constant for a fixed context sequence.

    ``exact`` enumerates every window start and every arm sequence inside
    the window (budget-capped); ``monte_carlo`` samples window/sequence
    pairs and therefore over-estimates the true minimum, which the returned
    flag records.
    """
    if window < 1 or n <= window:
        raise PreconditionError("need 1 <= window < n")
    rounds = [context_source(t) for t in range(1, n + 1)]
    k = rounds[0].n_arms
    d = rounds[0].dim
    lam_b1 = float(np.linalg.eigvalsh(symmetrize(np.asarray(b1, dtype=float)))[0])
    outers = [
        np.einsum("kd,ke->kde", r.vectors, r.vectors) for r in rounds
    ]
    n_windows = n - window

    if mode == "exact":
        total = (k**window) * n_windows
        if total > EXACT_BUDGET:
            raise PreconditionError(
                f"exact enumeration needs {total} sequence evaluations, budget is {EXACT_BUDGET}"
            )
        rho = math.inf
        checked = 0
        for t0 in range(1, n_windows + 1):
            val, count = _window_min_eig_exact(outers[t0 : t0 + window])
            rho = min(rho, val)
            checked += count
        is_estimate = False
    elif mode == "monte_carlo":
        if rng is None:
            raise ValueError("monte_carlo mode needs a generator")
        samples = max(int(samples), 10_000)
        t0s = rng.integers(1, n_windows + 1, size=samples)
        seqs = rng.integers(0, k, size=(samples, window))
        grams = np.zeros((samples, d, d))
        for j in range(window):
            stacked = np.stack([outers[t0 + j][seqs[i, j]] for i, t0 in enumerate(t0s)])
            grams += stacked
        rho = float(np.linalg.eigvalsh(grams)[:, 0].min())
        checked = samples
        is_estimate = True
    else:
        raise ValueError(f"unknown mode {mode!r}")

    scale = max(1.0, float(max(np.abs(r.vectors).max() for r in rounds)) ** 2 * window)
    if rho <= EIGEN_ZERO_TOL * scale:
        return AssumptionParams(window, 0.0, lam_b1, None, is_estimate, checked)
    vartheta = min(rho, lam_b1) / (4.0 * window)
    return AssumptionParams(window, float(rho), lam_b1, vartheta, is_estimate, checked)


@dataclass(frozen=True)
class BoundInputs:
    """Inputs to the regret-bound constants and right-hand sides.

    ``lambda_min`` and ``lambda_max`` are the extreme eigenvalues of the
    inverse task covariance core; ``eigencondition_ok`` records whether the
    meta covariance is wide enough for the contraction-based constants.
    """

    m: int
    n: int
    k: int
    d: int
    v: float
    delta: float
    lambda_min: float
    lambda_max: float
    lambda_max_sigma_q: float
    mu_q_norm: float
    vartheta: float | None = None

    def __post_init__(self):
        if min(self.m, self.n, self.k, self.d) < 1:
            raise ValueError("m, n, k, d must be positive")
        if self.v <= 0 or self.delta <= 0:
            raise ValueError("v and delta must be positive")
        if self.lambda_min <= 0 or self.lambda_max < self.lambda_min:
            raise ValueError("need 0 < lambda_min <= lambda_max")
        if self.lambda_max_sigma_q <= 0 or self.mu_q_norm < 0:
            raise ValueError("invalid meta-prior statistics")

    @property
    def eigencondition_ok(self) -> bool:
        return self.lambda_max_sigma_q >= 2.0 / (175.0 * self.lambda_min)


@dataclass(frozen=True)
class BoundConstants:
    u1: float
    u2: float
    u3: float
    u4: float
    u5: float


def bound_constants(inputs: BoundInputs) -> BoundConstants:
    """The five closed-form constants of the regret bounds.

    Raises PreconditionError naming the condition whenever a radicand would
    go negative: the confidence level must not exceed 2d, and the meta
    covariance must satisfy the eigenvalue condition.
    """
    d, v, delta = inputs.d, inputs.v, inputs.delta
    log2d = math.log(2.0 * d / delta)
    log4d = math.log(4.0 * d / delta)
    if log2d < 0:
        raise PreconditionError("confidence parameter delta exceeds 2d: log(2d/delta) < 0")
    floor_term = 2.0 / (175.0 * inputs.lambda_min)
    gap = inputs.lambda_max_sigma_q - floor_term
    if gap < 0:
        raise PreconditionError(
            "eigenvalue condition failed: lambda_max(meta cov) < 2 / (175 lambda_min)"
        )
    u1 = inputs.mu_q_norm + v * math.sqrt(d * inputs.lambda_max_sigma_q * log2d)
    u2 = math.sqrt(d * gap * log2d)
    u3 = math.sqrt(d * floor_term * log2d)
    u4 = math.sqrt(d * gap * log4d)
    u5 = math.sqrt(d * floor_term * log4d)
    return BoundConstants(u1, u2, u3, u4, u5)


def theorem_rhs(inputs: BoundInputs, which: str) -> float:
    """Right-hand side of the regret bound over m tasks of n rounds.

    ``which`` picks the agent flavor: the mean-playing meta agent uses the
    tighter constants with coefficient 2k, the sampling one the wider
    constants with coefficient 4k.
    """
    if which not in ("meta_tslb", "meta_ts"):
        raise ValueError("which must be 'meta_tslb' or 'meta_ts'")
    if inputs.vartheta is None or inputs.vartheta <= 0:
        raise PreconditionError("vartheta must be positive to evaluate the bound")
    u = bound_constants(inputs)
    m, n, k, v = inputs.m, inputs.n, inputs.k, inputs.v
    lam_min, lam_max = inputs.lambda_min, inputs.lambda_max
    explore = math.sqrt(1.0 / lam_min) + math.sqrt((n - 1.0) / inputs.vartheta)
    term1 = 2.0 * m * v * explore * math.sqrt(2.0 * math.log(n)) if n > 1 else 0.0
    term2 = m * k * v * math.sqrt(2.0 / (math.pi * lam_min))
    width = u.u1 + v * math.sqrt(2.0 * math.log(n) / lam_min)
    if which == "meta_tslb":
        coef = 2.0 * k * (4.0 * math.log(m) * u.u2 + m * u.u3)
    else:
        coef = 4.0 * k * (4.0 * math.log(m) * u.u4 + m * u.u5)
    term3 = coef * width * explore * math.sqrt(2.0 * lam_max / math.pi)
    term4 = 4.0 * m * k * v * (math.sqrt(1.0 / (2.0 * math.pi * lam_min)) + u.u1)
    return term1 + term2 + term3 + term4


def check_generalization_threshold(
    m: int, v: float, delta: float, inputs: BoundInputs
) -> float:
    """Largest meta-prior mean shift for which warm-starting from a learned
    meta-posterior still beats restarting from the original meta-prior."""
    if m < 2:
        raise PreconditionError("threshold needs m >= 2")
    u = bound_constants(inputs)
    return v * (4.0 * math.log(m) / m - (7.0 / 8.0) ** (m / 2.0)) * u.u2


@dataclass(frozen=True)
class TrajectoryDiagnostics:
    """Per-round posterior-width diagnostics of one task trajectory.

    ``lambda_min_b[t-1]`` is the minimum eigenvalue of the precision at the
    start of round t; ``s_squared[t-1, i]`` the posterior variance factor of
    arm i in round t.
    """

    lambda_min_b: np.ndarray
    s_squared: np.ndarray
    context_norms_sq: np.ndarray

    @property
    def n_rounds(self) -> int:
        return self.lambda_min_b.shape[0]


def trajectory_diagnostics(
    prior: GaussianBelief,
    rounds: Sequence[RoundContexts],
    history: Sequence[HistoryEntry],
) -> TrajectoryDiagnostics:
    """Replay a trajectory and record eigenvalue and width diagnostics."""
    if len(rounds) != len(history):
        raise ValueError("need one context set per history entry")
    n = len(history)
    d = prior.dim
    precision = inv_pd(prior.cov_core, what="prior covariance")
    lam = np.empty(n)
    k = rounds[0].n_arms
    s_sq = np.empty((n, k))
    norms = np.empty((n, k))
    for t in range(n):
        vecs = rounds[t].vectors
        lam[t] = float(np.linalg.eigvalsh(precision)[0])
        sols = np.linalg.solve(precision, vecs.T)
        s_sq[t] = np.einsum("kd,dk->k", vecs, sols)
        norms[t] = np.einsum("kd,kd->k", vecs, vecs)
        b = history[t].context
        precision = symmetrize(precision + np.outer(b, b))
    return TrajectoryDiagnostics(lam, s_sq, norms)


@dataclass(frozen=True)
class EigenSumReport:
    holds: bool
    lhs: float
    rhs: float
    n_rounds: int
    degenerate_single_round: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def verify_assumption(diag: TrajectoryDiagnostics, params: AssumptionParams) -> bool:
    """Per-round check that the precision floor grows linearly at rate
    ``4 vartheta``."""
    if params.vartheta is None:
        return False
    t = np.arange(1, diag.n_rounds + 1)
    return bool(
        np.all(diag.lambda_min_b + ASSUMPTION_TOL >= 4.0 * params.vartheta * (t - 1))
    )


def check_eigen_sum_bound(
    diag: TrajectoryDiagnostics, params: AssumptionParams
) -> EigenSumReport:
    """Check that the summed inverse-root eigenvalues stay below the
    closed-form budget. Strict for horizons of at least two rounds; the
    single-round case degenerates to equality and is flagged."""
    if params.vartheta is None:
        raise PreconditionError("vartheta is undefined: rank-deficient windows")
    if not verify_assumption(diag, params):
        raise PreconditionError("trajectory violates the eigenvalue growth assumption")
    n = diag.n_rounds
    lhs = float(np.sum(1.0 / np.sqrt(diag.lambda_min_b)))
    rhs = 1.0 / math.sqrt(diag.lambda_min_b[0]) + math.sqrt((n - 1) / params.vartheta)
    if n == 1:
        return EigenSumReport(lhs <= rhs + 1e-12, lhs, rhs, n, True)
    return EigenSumReport(lhs < rhs, lhs, rhs, n, False)


def check_posterior_width_bound(diag: TrajectoryDiagnostics) -> tuple[bool, float]:
    """Check ``s_i(t)^2 <= |b_i(t)|^2 / lambda_min(B(t))`` everywhere on the
    trajectory; returns the verdict and the worst slack."""
    bound = diag.context_norms_sq / diag.lambda_min_b[:, None]
    slack = bound - diag.s_squared
    return bool(np.all(slack >= -1e-9)), float(slack.min())
