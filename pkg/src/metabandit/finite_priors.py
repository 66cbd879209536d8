"""Meta-learning over a finite bank of candidate instance priors.

The meta-posterior is a weight vector over the bank. After each task the
weights are multiplied by the exact Gaussian evidence of the task history
under each candidate prior and renormalized; all of it in log domain, so
dozens of tasks cannot underflow the weights to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GaussianBelief, HistoryEntry
from .linalg import inv_pd, symmetrize

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class PriorBank:
    """Candidate instance priors with posterior weights over them."""

    priors: tuple[GaussianBelief, ...]
    weights: np.ndarray

    def __post_init__(self):
        priors = tuple(self.priors)
        if len(priors) < 1:
            raise ValueError("bank must contain at least one prior")
        dims = {p.dim for p in priors}
        if len(dims) != 1:
            raise ValueError("all priors must share one dimension")
        scales = {p.noise_scale for p in priors}
        if len(scales) != 1:
            raise ValueError("all priors must share one noise scale")
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (len(priors),):
            raise ValueError("weights length must match the number of priors")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights must sum to 1")
        weights.setflags(write=False)
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return len(self.priors)

    @property
    def dim(self) -> int:
        return self.priors[0].dim

    @property
    def noise_scale(self) -> float:
        return self.priors[0].noise_scale

    @classmethod
    def uniform(cls, priors: Sequence[GaussianBelief]) -> "PriorBank":
        k = len(priors)
        return cls(tuple(priors), np.full(k, 1.0 / k))


def log_evidence(prior: GaussianBelief, history: Sequence[HistoryEntry]) -> float:
    """Log marginal likelihood of a task history under one candidate prior,
    up to an additive constant shared by all candidates.

    Marginalizes the task parameter analytically; terms that do not depend
    on the candidate (reward norms, 2 pi powers) are dropped.
    """
    if len(history) == 0:
        return 0.0
    d = prior.dim
    v2 = prior.noise_scale**2
    gram = np.zeros((d, d))
    reward_vec = np.zeros(d)
    for entry in history:
        gram += np.outer(entry.context, entry.context)
        reward_vec += entry.reward * entry.context
    prec = inv_pd(prior.cov_core, what="candidate prior covariance")
    g = symmetrize(gram + prec)
    rhs = reward_vec + prec @ prior.mean
    xi = np.linalg.solve(g, rhs)
    quad = float(prior.mean @ (prec @ prior.mean) - rhs @ xi)
    sign_c, logdet_c = np.linalg.slogdet(prior.cov_core)
    sign_g, logdet_g = np.linalg.slogdet(g)
    if sign_c <= 0 or sign_g <= 0:
        raise ValueError("evidence normal matrix lost definiteness")
    return -0.5 * (logdet_c + logdet_g) - quad / (2.0 * v2)


def finite_prior_update(bank: PriorBank, history: Sequence[HistoryEntry]) -> PriorBank:
    """Reweight the bank by each candidate's evidence for the history."""
    log_w = np.log(np.maximum(bank.weights, 1e-300))
    log_w = log_w + np.array([log_evidence(p, history) for p in bank.priors])
    log_w -= log_w.max()
    w = np.exp(log_w)
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise ArithmeticError("bank weights degenerated to zero mass")
    return PriorBank(bank.priors, w / total)


def finite_prior_select(bank: PriorBank) -> int:
    """Index of the heaviest candidate; lowest index wins ties."""
    return int(np.argmax(bank.weights))


def sample_prior_index(bank: PriorBank, rng: np.random.Generator) -> int:
    """Draw a candidate index from the weights. Sampling counterpart of
    :func:`finite_prior_select`, used by the sampling-style meta agent."""
    u = rng.random()
    return int(np.searchsorted(np.cumsum(bank.weights), u, side="right").clip(0, bank.size - 1))


class BankSelectAgent:
    """Meta agent over a prior bank: plays the heaviest candidate each task
    and reweights the bank on the completed history."""

    def __init__(self, bank: PriorBank, name: str = "meta_tslb"):
        self.name = name
        self.bank = bank

    def task_prior(self, task: int, rng: np.random.Generator) -> GaussianBelief:
        return self.bank.priors[finite_prior_select(self.bank)]

    def observe(self, history: Sequence[HistoryEntry]) -> None:
        self.bank = finite_prior_update(self.bank, history)


class BankSampleAgent(BankSelectAgent):
    """Sampling-rule variant: draws the candidate index from the weights
    instead of taking the argmax."""

    def __init__(self, bank: PriorBank, name: str = "meta_ts"):
        super().__init__(bank, name=name)

    def task_prior(self, task: int, rng: np.random.Generator) -> GaussianBelief:
        return self.bank.priors[sample_prior_index(self.bank, rng)]


def mixture_moment_match(bank: PriorBank) -> GaussianBelief:
    """Gaussian with the mean and covariance of the bank mixture.

    The mixture covariance of a task parameter is the weighted average of
    candidate covariances plus the spread of candidate means; the spread is
    divided by the squared noise scale to express it as a covariance core.
    """
    v2 = bank.noise_scale**2
    mean = np.zeros(bank.dim)
    for w, p in zip(bank.weights, bank.priors):
        mean += w * p.mean
    core = np.zeros((bank.dim, bank.dim))
    for w, p in zip(bank.weights, bank.priors):
        delta = p.mean - mean
        core += w * (p.cov_core + np.outer(delta, delta) / v2)
    return GaussianBelief(mean, symmetrize(core), bank.noise_scale)
