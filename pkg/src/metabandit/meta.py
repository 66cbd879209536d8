"""Meta-level agents and the exact Gaussian meta-posterior update.

Four task-prior policies share one protocol: a meta-learning agent that
plays each task with the current meta-posterior mean, a variant that
samples the task prior mean from the meta-posterior, an oracle that knows
the true instance prior, and a static agent that plays the marginal prior
of a task parameter under the hierarchy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    BanditInstance,
    GaussianBelief,
    HistoryEntry,
    RegretTrace,
    RoundContexts,
    sample_gaussian,
)
from .linalg import inv_pd, symmetrize
from .rng import StreamFactory
from .ts import SeededTaskStreams, run_ts_task

META_TSLB = "meta_tslb"
META_TS = "meta_ts"
ORACLE_TS = "oracle_ts"
MARGINAL_TS = "marginal_ts"
AGENT_NAMES = (META_TSLB, META_TS, ORACLE_TS, MARGINAL_TS)


@dataclass(frozen=True)
class MetaPosterior:
    """Gaussian belief over the unknown instance-prior mean after some
    number of completed tasks."""

    belief: GaussianBelief
    task_index: int

    @property
    def dim(self) -> int:
        return self.belief.dim


def _history_sums(history: Sequence[HistoryEntry]) -> tuple[np.ndarray, np.ndarray]:
    d = history[0].context.shape[0]
    gram = np.zeros((d, d))
    reward_vec = np.zeros(d)
    for entry in history:
        gram += np.outer(entry.context, entry.context)
        reward_vec += entry.reward * entry.context
    return gram, reward_vec


def meta_posterior_update(
    q: MetaPosterior,
    task_cov: np.ndarray,
    history: Sequence[HistoryEntry],
) -> MetaPosterior:
    """Condition the meta-posterior on one completed task.

    With ``S`` the Gram sum of pulled contexts, ``Y`` the reward-weighted
    context sum and ``C`` the known task covariance core, the new
    covariance core is ``inv(inv(Q) + inv(C) - inv(C S C + C))`` and the
    new mean is ``cov' @ (inv(Q) mu + inv(C S + I)^T Y)``. An empty history
    returns the input unchanged.
    """
    if len(history) == 0:
        return MetaPosterior(q.belief, q.task_index + 1)
    task_cov = np.asarray(task_cov, dtype=float)
    gram, reward_vec = _history_sums(history)
    d = q.dim
    q_prec = inv_pd(q.belief.cov_core, what="meta covariance")
    task_prec = inv_pd(task_cov, what="task covariance")
    damped = inv_pd(task_cov @ gram @ task_cov + task_cov, what="smoothed Gram")
    new_cov = inv_pd(q_prec + task_prec - damped, what="updated meta precision")
    shifted = task_cov @ gram + np.eye(d)
    new_mean = new_cov @ (q_prec @ q.belief.mean + np.linalg.solve(shifted.T, reward_vec))
    return MetaPosterior(
        GaussianBelief(new_mean, new_cov, q.belief.noise_scale), q.task_index + 1
    )


def meta_posterior_update_alt(
    q: MetaPosterior,
    task_cov: np.ndarray,
    history: Sequence[HistoryEntry],
) -> MetaPosterior:
    """Algebraically identical reformulation via the normal equations.

    Goes through the per-task Gram-plus-precision matrix ``G`` instead of
    the smoothed Gram; kept as an independent cross-check of
    :func:`meta_posterior_update` and asserted equal in the verify suite.
    """
    if len(history) == 0:
        return MetaPosterior(q.belief, q.task_index + 1)
    task_cov = np.asarray(task_cov, dtype=float)
    gram, reward_vec = _history_sums(history)
    q_prec = inv_pd(q.belief.cov_core, what="meta covariance")
    task_prec = inv_pd(task_cov, what="task covariance")
    g = gram + task_prec
    g_inv = inv_pd(g, what="task normal matrix")
    w = symmetrize(task_prec + q_prec - task_prec @ g_inv @ task_prec)
    new_cov = inv_pd(w, what="updated meta precision")
    new_mean = new_cov @ (q_prec @ q.belief.mean + task_prec @ (g_inv @ reward_vec))
    return MetaPosterior(
        GaussianBelief(new_mean, new_cov, q.belief.noise_scale), q.task_index + 1
    )


def marginal_task_belief(meta_prior: GaussianBelief, task_cov: np.ndarray) -> GaussianBelief:
    """Marginal distribution of a task parameter under the hierarchy:
    the meta-prior covariance and task covariance add."""
    return GaussianBelief(
        meta_prior.mean,
        meta_prior.cov_core + np.asarray(task_cov, dtype=float),
        meta_prior.noise_scale,
    )


class MetaAgent:
    """Task-prior policy over a sequence of tasks.

    Subclasses decide the prior for each task and may update internal state
    from the completed task's history. Instances are per-run and must be
    fed tasks in order.
    """

    name: str

    def __init__(self, name: str):
        self.name = name

    def task_prior(self, task: int, rng: np.random.Generator) -> GaussianBelief:
        raise NotImplementedError

    def observe(self, history: Sequence[HistoryEntry]) -> None:
        pass


class MetaTSLBAgent(MetaAgent):
    """Plays each task with the current meta-posterior mean and the known
    task covariance, then conditions the meta-posterior on the history."""

    def __init__(self, meta_prior: GaussianBelief, task_cov: np.ndarray, name: str = META_TSLB):
        super().__init__(name)
        self.posterior = MetaPosterior(meta_prior, task_index=1)
        self.task_cov = np.asarray(task_cov, dtype=float)

    def task_prior(self, task: int, rng: np.random.Generator) -> GaussianBelief:
        return GaussianBelief(
            self.posterior.belief.mean, self.task_cov, self.posterior.belief.noise_scale
        )

    def observe(self, history: Sequence[HistoryEntry]) -> None:
        self.posterior = meta_posterior_update(self.posterior, self.task_cov, history)


class MetaTSAgent(MetaTSLBAgent):
    """Same meta-posterior recursion, but the task prior mean is a draw
    from the meta-posterior rather than its mean."""

    def __init__(self, meta_prior: GaussianBelief, task_cov: np.ndarray, name: str = META_TS):
        super().__init__(meta_prior, task_cov, name=name)

    def task_prior(self, task: int, rng: np.random.Generator) -> GaussianBelief:
        mean = sample_gaussian(self.posterior.belief, rng)
        return GaussianBelief(mean, self.task_cov, self.posterior.belief.noise_scale)


class OracleTSAgent(MetaAgent):
    """Knows the true instance prior and plays it every task."""

    def __init__(self, instance_prior: GaussianBelief, name: str = ORACLE_TS):
        super().__init__(name)
        self.instance_prior = instance_prior

    def task_prior(self, task: int, rng: np.random.Generator) -> GaussianBelief:
        return self.instance_prior


class MarginalTSAgent(MetaAgent):
    """Ignores meta-learning: plays the fixed marginal of a task parameter
    under the hierarchy (meta covariance plus task covariance)."""

    def __init__(self, meta_prior: GaussianBelief, task_cov: np.ndarray, name: str = MARGINAL_TS):
        super().__init__(name)
        self.prior = marginal_task_belief(meta_prior, task_cov)

    def task_prior(self, task: int, rng: np.random.Generator) -> GaussianBelief:
        return self.prior


TaskContextSource = Callable[[int, int], RoundContexts]


def _run_agent(
    agent: MetaAgent,
    instance_prior: GaussianBelief,
    m: int,
    n: int,
    context_source: TaskContextSource,
    factory: StreamFactory,
    run: int = 0,
) -> RegretTrace:
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    trace = RegretTrace(n_tasks=m, n_rounds=n)
    instant = np.empty((m, n))
    for s in range(1, m + 1):
        mu_s = sample_gaussian(instance_prior, factory.stream("instance", run, s))
        prior = agent.task_prior(s, factory.stream("task_prior", agent.name, run, s))
        history, task_trace = run_ts_task(
            prior,
            BanditInstance(mu_s),
            lambda t, s=s: context_source(s, t),
            n,
            SeededTaskStreams(factory, agent=agent.name, run=run, task=s),
        )
        agent.observe(history)
        instant[s - 1] = task_trace.instant
    trace.add_run(run, agent.name, instant)
    return trace


def run_meta_tslb(
    meta_prior: GaussianBelief,
    instance_prior: GaussianBelief,
    m: int,
    n: int,
    context_source: TaskContextSource,
    factory: StreamFactory,
) -> RegretTrace:
    """Meta-learning agent on m sequential tasks drawn from the instance
    prior; the agent sees only the task covariance, never the true mean."""
    agent = MetaTSLBAgent(meta_prior, instance_prior.cov_core)
    return _run_agent(agent, instance_prior, m, n, context_source, factory)


def run_meta_ts(
    meta_prior: GaussianBelief,
    instance_prior: GaussianBelief,
    m: int,
    n: int,
    context_source: TaskContextSource,
    factory: StreamFactory,
) -> RegretTrace:
    agent = MetaTSAgent(meta_prior, instance_prior.cov_core)
    return _run_agent(agent, instance_prior, m, n, context_source, factory)


def run_oracle_ts(
    meta_prior: GaussianBelief,
    instance_prior: GaussianBelief,
    m: int,
    n: int,
    context_source: TaskContextSource,
    factory: StreamFactory,
) -> RegretTrace:
    agent = OracleTSAgent(instance_prior)
    return _run_agent(agent, instance_prior, m, n, context_source, factory)


def run_marginal_ts(
    meta_prior: GaussianBelief,
    instance_prior: GaussianBelief,
    m: int,
    n: int,
    context_source: TaskContextSource,
    factory: StreamFactory,
) -> RegretTrace:
    agent = MarginalTSAgent(meta_prior, instance_prior.cov_core)
    return _run_agent(agent, instance_prior, m, n, context_source, factory)
