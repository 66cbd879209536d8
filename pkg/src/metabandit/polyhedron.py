"""Polyhedral action sets for the continuous-arm bandit variant.

An action set is ``{x : A x <= b}``. Selection maximizes a linear
objective over the set, which a bounded nonempty polyhedron attains at a
vertex, so the dense simplex is exact up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BanditInstance, GaussianBelief, HistoryEntry, TaskTrace
from .simplex import InfeasibleError, UnboundedError, simplex_maximize
from .ts import TaskRoundError, TaskStreams, posterior_sample, ts_init, ts_update


class InvalidPolyhedronError(ValueError):
    """Raised at construction when the region is empty or unbounded."""


@dataclass(frozen=True)
class Polyhedron:
    """Feasible set ``{x : a @ x <= b}``.

    With ``check=True`` construction verifies nonemptiness (one feasibility
    solve) and boundedness (a max and a min along every coordinate axis).
    Generators that guarantee both by construction may skip the check.
    """

    a: np.ndarray
    b: np.ndarray
    check: bool = True

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 2 or b.shape != (a.shape[0],):
            raise ValueError("need a (c, d) matrix and a length-c bound vector")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.check:
            self._verify()

    @property
    def dim(self) -> int:
        return self.a.shape[1]

    def _verify(self) -> None:
        d = self.dim
        try:
            for i in range(d):
                direction = np.zeros(d)
                direction[i] = 1.0
                simplex_maximize(direction, self.a, self.b)
                simplex_maximize(-direction, self.a, self.b)
        except InfeasibleError as exc:
            raise InvalidPolyhedronError("polyhedron is empty") from exc
        except UnboundedError as exc:
            raise InvalidPolyhedronError("polyhedron is unbounded") from exc

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(self.a @ np.asarray(x, dtype=float) <= self.b + tol))


def lp_argmax(poly: Polyhedron, objective: np.ndarray) -> np.ndarray:
    """Feasible point maximizing ``objective @ x`` over the polyhedron."""
    x, _ = simplex_maximize(np.asarray(objective, dtype=float), poly.a, poly.b)
    return x


def lp_max_value(poly: Polyhedron, objective: np.ndarray) -> float:
    _, value = simplex_maximize(np.asarray(objective, dtype=float), poly.a, poly.b)
    return value


def run_polyhedral_ts_task(
    prior: GaussianBelief,
    instance: BanditInstance,
    polys: Sequence[Polyhedron],
    n: int,
    streams: TaskStreams,
    optimal_values: np.ndarray | None = None,
) -> tuple[list[HistoryEntry], TaskTrace]:
    """Thompson sampling where each round's action set is a polyhedron.

    Selection solves one LP against the posterior draw; regret is measured
    against the LP optimum under the true parameter, so it is nonnegative.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(polys) < n:
        raise ValueError("need one polyhedron per round")
    state = ts_init(prior)
    v = prior.noise_scale
    mu = instance.mu
    history: list[HistoryEntry] = []
    instant = np.empty(n)
    for t in range(1, n + 1):
        try:
            poly = polys[t - 1]
            draw = posterior_sample(state, streams.posterior(t))
            chosen = lp_argmax(poly, draw)
            mean_reward = float(chosen @ mu)
            reward = mean_reward + v * streams.reward_noise(t)
            state = ts_update(state, chosen, reward)
            if optimal_values is None:
                best = lp_max_value(poly, mu)
            else:
                best = float(optimal_values[t - 1])
        except Exception as exc:
            raise TaskRoundError(str(exc), round=t) from exc
        instant[t - 1] = best - mean_reward
        history.append(HistoryEntry(t, chosen, chosen, reward))
    return history, TaskTrace(instant)


def random_polyhedron(
    d: int,
    rng: np.random.Generator,
    n_rows: int = 5,
    box: float = 50.0,
) -> Polyhedron:
    """Random bounded nonempty polyhedron for the continuous-arm benchmark.

    Rows of ``A`` are uniform in [-1, 1]; the bound vector is ``A x0 + u``
    with x0 in [0, 1]^d and u in (0, 1]^rows, so x0 is strictly feasible.
    Box rows at ``|x_i| <= box`` guarantee boundedness, which lets the
    constructor skip its LP checks.
    """
    a = rng.uniform(-1.0, 1.0, size=(n_rows, d))
    x0 = rng.uniform(0.0, 1.0, size=d)
    u = 1.0 - rng.random(n_rows)  # in (0, 1]
    b = a @ x0 + u
    a_full = np.vstack([a, np.eye(d), -np.eye(d)])
    b_full = np.concatenate([b, np.full(d, box), np.full(d, box)])
    return Polyhedron(a_full, b_full, check=False)
