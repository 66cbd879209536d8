"""Core domain types: Gaussian beliefs, bandit instances, per-round
contexts, interaction histories and regret accounting.

Every type is immutable after construction; operations return new values.
Arrays are copied in and marked read-only so instances can be shared across
threads without defensive copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .linalg import SYM_TOL, chol_pd, max_asymmetry, symmetrize


class InvalidBeliefError(ValueError):
    """A Gaussian belief failed its shape, symmetry or definiteness checks."""


def _frozen_array(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaussianBelief:
    """Multivariate normal ``N(mean, noise_scale**2 * cov_core)``.

    The covariance is stored as a core matrix with the squared noise scale
    applied implicitly, so changing the noise scale never rescales the
    matrix. ``cov_core`` must be symmetric within 1e-10 and positive
    definite; it is symmetrized on the way in.
    """

    mean: np.ndarray
    cov_core: np.ndarray
    noise_scale: float

    def __post_init__(self):
        mean = _frozen_array(self.mean)
        cov = np.array(self.cov_core, dtype=float)
        if mean.ndim != 1:
            raise InvalidBeliefError("mean must be a vector")
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise InvalidBeliefError(f"cov_core must be {d}x{d}, got {cov.shape}")
        if max_asymmetry(cov) > SYM_TOL:
            raise InvalidBeliefError("cov_core asymmetry exceeds 1e-10")
        cov = symmetrize(cov)
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise InvalidBeliefError("cov_core is not positive definite") from exc
        if not self.noise_scale > 0:
            raise InvalidBeliefError("noise_scale must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov_core", _frozen_array(cov))
        object.__setattr__(self, "noise_scale", float(self.noise_scale))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def covariance(self) -> np.ndarray:
        """The actual covariance ``noise_scale**2 * cov_core``."""
        return self.noise_scale**2 * self.cov_core

    def with_mean(self, mean) -> "GaussianBelief":
        return GaussianBelief(mean, self.cov_core, self.noise_scale)


def sample_gaussian(belief: GaussianBelief, rng: np.random.Generator) -> np.ndarray:
    """One draw from ``belief``: mean + noise_scale * L z with L the lower
    Cholesky factor of cov_core and z standard normal.

    Deterministic given the generator state; identical seeds reproduce the
    draw bitwise.
    """
    try:
        factor, _ = chol_pd(belief.cov_core, what="belief covariance")
    except Exception as exc:
        raise InvalidBeliefError(str(exc)) from exc
    z = rng.standard_normal(belief.dim)
    return belief.mean + belief.noise_scale * (factor @ z)


@dataclass(frozen=True)
class BanditInstance:
    """A single task's reward parameter vector."""

    mu: np.ndarray

    def __post_init__(self):
        mu = _frozen_array(self.mu)
        if mu.ndim != 1:
            raise ValueError("mu must be a vector")
        object.__setattr__(self, "mu", mu)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class RoundContexts:
    """The context vectors offered in one round, one row per arm."""

    vectors: np.ndarray
    round_index: int

    def __post_init__(self):
        vecs = np.array(self.vectors, dtype=float)
        if vecs.ndim != 2 or vecs.shape[0] < 1:
            raise ValueError("vectors must be a nonempty (k, d) array")
        if self.round_index < 1:
            raise ValueError("round_index must be >= 1")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "round_index", int(self.round_index))

    @property
    def n_arms(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class HistoryEntry:
    """One observed interaction: the pulled arm, its context and reward.

    ``pulled_arm`` is an arm index for finite-arm rounds and the chosen
    context vector when the action set is continuous.
    """

    round: int
    pulled_arm: Union[int, np.ndarray]
    context: np.ndarray
    reward: float

    def __post_init__(self):
        object.__setattr__(self, "context", _frozen_array(self.context))
        object.__setattr__(self, "reward", float(self.reward))


def true_arm_values(instance: BanditInstance, contexts: RoundContexts) -> np.ndarray:
    if contexts.dim != instance.dim:
        raise ValueError("context dimension does not match instance")
    return contexts.vectors @ instance.mu


def best_arm(instance: BanditInstance, contexts: RoundContexts) -> int:
    """Optimal arm under the true parameter; lowest index wins ties."""
    return int(np.argmax(true_arm_values(instance, contexts)))


def instant_regret(
    instance: BanditInstance, contexts: RoundContexts, pulled: int
) -> float:
    """Gap between the best arm's value and the pulled arm's value.

    Nonnegative by definition of the maximum.
    """
    values = true_arm_values(instance, contexts)
    if not 0 <= pulled < contexts.n_arms:
        raise IndexError(f"arm index {pulled} out of range [0, {contexts.n_arms})")
    return float(values.max() - values[pulled])


@dataclass
class TaskTrace:
    """Per-round regret for one task of one agent."""

    instant: np.ndarray

    def __post_init__(self):
        self.instant = np.asarray(self.instant, dtype=float)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.instant)

    @property
    def total(self) -> float:
        return float(self.instant.sum())


class RegretTrace:
    """Instantaneous and cumulative regret for every (run, task, round,
    agent) coordinate of an experiment.

    Backed by one ``(m, n)`` array per (run, agent) pair; records are
    materialized lazily because default-scale experiments produce millions
    of them.
    """

    def __init__(self, n_tasks: int, n_rounds: int):
        self.n_tasks = int(n_tasks)
        self.n_rounds = int(n_rounds)
        self._data: dict[tuple[int, str], np.ndarray] = {}

    def add_run(self, run: int, agent: str, instant: np.ndarray) -> None:
        instant = np.asarray(instant, dtype=float)
        if instant.shape != (self.n_tasks, self.n_rounds):
            raise ValueError(
                f"expected shape {(self.n_tasks, self.n_rounds)}, got {instant.shape}"
            )
        if (run, agent) in self._data:
            raise ValueError(f"duplicate trace for run={run}, agent={agent}")
        self._data[(run, agent)] = instant

    @property
    def runs(self) -> list[int]:
        return sorted({run for run, _ in self._data})

    @property
    def agents(self) -> list[str]:
        seen: list[str] = []
        for _, agent in self._data:
            if agent not in seen:
                seen.append(agent)
        return seen

    def instant_array(self, run: int, agent: str) -> np.ndarray:
        return self._data[(run, agent)]

    def per_task_final(self, agent: str) -> np.ndarray:
        """(runs, m) array of within-task final cumulative regret."""
        return np.stack(
            [self._data[(run, agent)].sum(axis=1) for run in self.runs]
        )

    def total_per_run(self, agent: str) -> np.ndarray:
        """(runs,) array of regret summed over all tasks and rounds."""
        return np.array(
            [self._data[(run, agent)].sum() for run in self.runs]
        )

    def iter_records(self) -> Iterator[tuple[int, int, int, str, float, float]]:
        """Yield (run, task, round, agent, instant, cumulative) records.

        Tasks and rounds are 1-based; cumulative regret resets per task and
        is nondecreasing in the round for fixed (run, task, agent).
        """
        for run in self.runs:
            for agent in self.agents:
                if (run, agent) not in self._data:
                    continue
                instant = self._data[(run, agent)]
                cumulative = np.cumsum(instant, axis=1)
                for s in range(self.n_tasks):
                    for t in range(self.n_rounds):
                        yield (
                            run,
                            s + 1,
                            t + 1,
                            agent,
                            float(instant[s, t]),
                            float(cumulative[s, t]),
                        )

    @property
    def n_records(self) -> int:
        return len(self._data) * self.n_tasks * self.n_rounds

    def summary_rows(self) -> list[tuple[str, int, float, float]]:
        """(agent, task, mean over runs of final cumulative, stderr) rows."""
        rows = []
        n_runs = len(self.runs)
        for agent in self.agents:
            finals = self.per_task_final(agent)
            means = finals.mean(axis=0)
            if n_runs > 1:
                stderr = finals.std(axis=0, ddof=1) / np.sqrt(n_runs)
            else:
                stderr = np.zeros(self.n_tasks)
            for s in range(self.n_tasks):
                rows.append((agent, s + 1, float(means[s]), float(stderr[s])))
        return rows
