"""Sequential composition of several finite-arm bandits.

Each round the agent picks one arm per sub-bandit in order; a combiner maps
the chosen context vectors to a single reward-bearing vector. Arms for
later sub-bandits are not yet chosen when an earlier one is decided, so the
previous round's picks stand in for them, which is what makes the
coordinate sweep well defined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import BanditInstance, GaussianBelief, HistoryEntry, TaskTrace
from .ts import TaskRoundError, TaskStreams, posterior_sample, ts_init, ts_update


def hadamard_combiner(*vectors: np.ndarray) -> np.ndarray:
    out = np.array(vectors[0], dtype=float)
    for v in vectors[1:]:
        out = out * v
    return out


@dataclass(frozen=True)
class SequentialSpec:
    """Layout of a sequential instance: per-sub-bandit arm counts, the
    combining map into reward space, and the arms assumed pulled before
    round one."""

    arm_counts: tuple[int, ...]
    gamma: Callable[..., np.ndarray]
    initial_arms: tuple[int, ...]
    dim: int

    def __post_init__(self):
        counts = tuple(int(k) for k in self.arm_counts)
        if len(counts) < 1 or any(k < 1 for k in counts):
            raise ValueError("arm counts must be positive")
        initial = tuple(int(a) for a in self.initial_arms)
        if len(initial) != len(counts):
            raise ValueError("initial arms must match the number of sub-bandits")
        if any(not 0 <= a < k for a, k in zip(initial, counts)):
            raise ValueError("initial arm out of range")
        object.__setattr__(self, "arm_counts", counts)
        object.__setattr__(self, "initial_arms", initial)
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def p(self) -> int:
        return len(self.arm_counts)


def combined_value_tensor(
    spec: SequentialSpec, contexts: Sequence[np.ndarray]
) -> np.ndarray:
    """Combined vectors for every arm combination, shape (k_1, ..., k_p, d).

    Exhaustive; intended for the experiment sizes where the product space
    has a few thousand entries.
    """
    if spec.gamma is hadamard_combiner:
        out = None
        p = spec.p
        for i, ctx in enumerate(contexts):
            shape = [1] * p + [spec.dim]
            shape[i] = ctx.shape[0]
            piece = ctx.reshape(shape)
            out = piece if out is None else out * piece
        return np.ascontiguousarray(out)
    out = np.empty(tuple(spec.arm_counts) + (spec.dim,))
    for idx in np.ndindex(*spec.arm_counts):
        out[idx] = spec.gamma(*[contexts[i][idx[i]] for i in range(spec.p)])
    return out


def optimal_combined_value(
    spec: SequentialSpec, contexts: Sequence[np.ndarray], mu: np.ndarray
) -> float:
    """Best achievable mean reward over the full combination space."""
    tensor = combined_value_tensor(spec, contexts)
    return float((tensor @ mu).max())


def sweep_select(
    spec: SequentialSpec,
    contexts: Sequence[np.ndarray],
    draw: np.ndarray,
    previous: Sequence[int],
) -> list[int]:
    """One pass of per-sub-bandit argmax choices against the sampled
    parameter, holding later coordinates at the previous round's arms."""
    chosen: list[int] = list(previous)
    for i in range(spec.p):
        fixed_before = [contexts[j][chosen[j]] for j in range(i)]
        fixed_after = [contexts[j][previous[j]] for j in range(i + 1, spec.p)]
        k_i = spec.arm_counts[i]
        values = np.empty(k_i)
        if spec.gamma is hadamard_combiner:
            other = np.ones(spec.dim)
            for vec in fixed_before + fixed_after:
                other = other * vec
            values = (contexts[i] * other) @ draw
        else:
            for a in range(k_i):
                values[a] = spec.gamma(*fixed_before, contexts[i][a], *fixed_after) @ draw
        chosen[i] = int(np.argmax(values))
    return chosen


def run_sequential_ts(
    spec: SequentialSpec,
    prior: GaussianBelief,
    instance: BanditInstance,
    n: int,
    context_source: Callable[[int], Sequence[np.ndarray]],
    streams: TaskStreams,
    optimal_values: np.ndarray | None = None,
) -> tuple[list[HistoryEntry], TaskTrace]:
    """Thompson sampling over the sequential instance.

    One posterior draw per round drives all sub-bandit choices; the
    posterior updates once on the combined vector. Regret is measured
    against the exhaustive optimum over the full combination space, which
    dominates any sweep outcome, so it is never negative.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    state = ts_init(prior)
    v = prior.noise_scale
    mu = instance.mu
    previous = list(spec.initial_arms)
    history: list[HistoryEntry] = []
    instant = np.empty(n)
    for t in range(1, n + 1):
        try:
            contexts = context_source(t)
            draw = posterior_sample(state, streams.posterior(t))
            chosen = sweep_select(spec, contexts, draw, previous)
            combined = spec.gamma(*[contexts[i][chosen[i]] for i in range(spec.p)])
            mean_reward = float(combined @ mu)
            reward = mean_reward + v * streams.reward_noise(t)
            state = ts_update(state, combined, reward)
            if optimal_values is None:
                best = optimal_combined_value(spec, contexts, mu)
            else:
                best = float(optimal_values[t - 1])
        except Exception as exc:
            raise TaskRoundError(str(exc), round=t) from exc
        instant[t - 1] = best - mean_reward
        history.append(HistoryEntry(t, tuple(chosen), combined, reward))
        previous = chosen
    return history, TaskTrace(instant)
