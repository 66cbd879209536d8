"""Thompson sampling for linear bandits with the closed-form Gaussian
posterior recursion.

The posterior after t-1 observations is ``N(mean, v**2 * inv(precision))``
where ``precision = B(1) + sum of b b^T`` over pulled contexts and ``mean``
solves ``precision @ mean = B(1) mu(1) + sum of r b``. The recursion stores
the precision matrix, never its inverse; sampling and mean updates go
through fresh factorizations each round so no inverse drift accumulates
over long horizons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .core import (
    BanditInstance,
    GaussianBelief,
    HistoryEntry,
    RoundContexts,
    TaskTrace,
)
from .linalg import chol_pd, inv_pd, symmetrize
from .rng import StreamFactory


@dataclass(frozen=True)
class PosteriorState:
    """Value-type state of the posterior recursion at the start of a round.

    ``info_accum`` is the running sum of reward-weighted contexts and
    ``prior_term`` the fixed vector ``B(1) @ mean(1)``; together they let
    the mean be recomputed from scratch at every update. ``chol`` caches
    the lower Cholesky factor of ``precision_core``.
    """

    precision_core: np.ndarray
    mean: np.ndarray
    round: int
    info_accum: np.ndarray
    prior_term: np.ndarray
    chol: np.ndarray
    noise_scale: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def ts_init(prior: GaussianBelief) -> PosteriorState:
    """Initial state: precision is the inverse of the prior covariance core."""
    precision = inv_pd(prior.cov_core, what="prior covariance")
    factor, precision = chol_pd(precision, what="prior precision")
    mean = np.array(prior.mean, dtype=float)
    return PosteriorState(
        precision_core=precision,
        mean=mean,
        round=1,
        info_accum=np.zeros(prior.dim),
        prior_term=precision @ mean,
        chol=factor,
        noise_scale=prior.noise_scale,
    )


def posterior_sample(state: PosteriorState, rng: np.random.Generator) -> np.ndarray:
    """Draw from ``N(mean, v**2 inv(precision))`` via the cached factor."""
    z = rng.standard_normal(state.dim)
    return state.mean + state.noise_scale * np.linalg.solve(state.chol.T, z)


def ts_select(
    state: PosteriorState, contexts: RoundContexts, rng: np.random.Generator
) -> int:
    """Sample a parameter and pull its best arm; lowest index wins ties."""
    if contexts.dim != state.dim:
        raise ValueError(
            f"context dimension {contexts.dim} does not match state dimension {state.dim}"
        )
    draw = posterior_sample(state, rng)
    return int(np.argmax(contexts.vectors @ draw))


def ts_update(
    state: PosteriorState, context: np.ndarray, reward: float
) -> PosteriorState:
    """Fold one observation into the recursion and advance the round."""
    context = np.asarray(context, dtype=float)
    if context.shape != (state.dim,):
        raise ValueError(f"context must have shape ({state.dim},)")
    # Rank-one updates of an exactly symmetric matrix stay exactly
    # symmetric, so the factorization can skip its symmetrization pass.
    precision = state.precision_core + context[:, None] * context[None, :]
    info = state.info_accum + reward * context
    factor, precision = chol_pd(
        precision, what="posterior precision", assume_symmetric=True
    )
    mean = np.linalg.solve(precision, state.prior_term + info)
    return PosteriorState(
        precision_core=precision,
        mean=mean,
        round=state.round + 1,
        info_accum=info,
        prior_term=state.prior_term,
        chol=factor,
        noise_scale=state.noise_scale,
    )


class TaskRoundError(RuntimeError):
    """A task loop failed inside a specific round; ``round`` records it so
    harness error reports can name the full (run, task, round) coordinate."""

    def __init__(self, message: str, round: int):
        super().__init__(message)
        self.round = round


class TaskStreams(Protocol):
    """Round-addressed randomness for one task of one agent."""

    def posterior(self, t: int) -> np.random.Generator: ...

    def reward_noise(self, t: int) -> float: ...


@dataclass
class SeededTaskStreams:
    """Substream-backed TaskStreams for standalone use.

    Posterior draws are agent-scoped; reward noise is not, so agents given
    the same (run, task) coordinates face identical noise realizations.
    """

    factory: StreamFactory
    agent: str = "ts"
    run: int = 0
    task: int = 0

    def posterior(self, t: int) -> np.random.Generator:
        return self.factory.stream("posterior", self.agent, self.run, self.task, t)

    def reward_noise(self, t: int) -> float:
        return float(
            self.factory.stream("reward", self.run, self.task, t).standard_normal()
        )


ContextSource = Callable[[int], RoundContexts]


def run_ts_task(
    prior: GaussianBelief,
    instance: BanditInstance,
    context_source: ContextSource,
    n: int,
    streams: TaskStreams,
    true_values: np.ndarray | None = None,
) -> tuple[list[HistoryEntry], TaskTrace]:
    """Play one n-round task: select, observe a noisy linear reward, update.

    Rewards are ``b^T mu + noise_scale * z`` with z from the shared reward
    stream, so two agents on identical streams face identical noise.
    ``true_values`` may carry the precomputed (n, k) table of mean rewards
    per round and arm; the harness shares it across agents. Returns the
    full interaction history and the per-round regret trace.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    state = ts_init(prior)
    v = prior.noise_scale
    mu = instance.mu
    history: list[HistoryEntry] = []
    instant = np.empty(n)
    for t in range(1, n + 1):
        try:
            contexts = context_source(t)
            arm = ts_select(state, contexts, streams.posterior(t))
            chosen = contexts.vectors[arm]
            values = contexts.vectors @ mu if true_values is None else true_values[t - 1]
            reward = float(values[arm] + v * streams.reward_noise(t))
            state = ts_update(state, chosen, reward)
        except Exception as exc:
            raise TaskRoundError(str(exc), round=t) from exc
        instant[t - 1] = float(values.max() - values[arm])
        history.append(HistoryEntry(t, arm, chosen, reward))
    return history, TaskTrace(instant)


def batch_posterior(
    prior: GaussianBelief, history: list[HistoryEntry]
) -> tuple[np.ndarray, np.ndarray]:
    """One-shot closed form for the posterior after a batch of observations.

    Independent of the recursion: builds the Gram sum and reward-weighted
    sum directly and solves once. Used to cross-check ``ts_update``.
    """
    precision = inv_pd(prior.cov_core, what="prior covariance")
    rhs = precision @ prior.mean
    for entry in history:
        precision = precision + np.outer(entry.context, entry.context)
        rhs = rhs + entry.reward * entry.context
    precision = symmetrize(precision)
    return precision, np.linalg.solve(precision, rhs)
