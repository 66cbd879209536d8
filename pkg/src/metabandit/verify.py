"""Self-contained invariant suites behind the ``verify`` CLI subcommand.

Each check simulates enough data to exercise one structural invariant of
the engine and reports a pass/fail verdict with its worst observed slack
(positive slack means margin to spare). A fault mode exists purely to
demonstrate that the checks can fail: it perturbs covariances the way a
missing symmetrization pass would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BanditInstance,
    GaussianBelief,
    HistoryEntry,
    RoundContexts,
    sample_gaussian,
)
from .harness import generate_covariance
from .linalg import max_asymmetry, max_eigenvalue
from .meta import (
    MetaPosterior,
    MetaTSLBAgent,
    meta_posterior_update,
    meta_posterior_update_alt,
)
from .rng import StreamFactory
from .theory import (
    check_eigen_sum_bound,
    check_posterior_width_bound,
    estimate_vartheta,
    trajectory_diagnostics,
)
from .ts import SeededTaskStreams, batch_posterior, run_ts_task, ts_init, ts_update

FAULT_MODES = ("skip-symmetrize",)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_slack: float
    detail: str

    def row(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"{self.name:<22} {status:<5} worst_slack={self.worst_slack:+.3e}  {self.detail}"


def _unit_contexts(rng: np.random.Generator, k: int, d: int) -> np.ndarray:
    vecs = rng.standard_normal((k, d))
    return vecs / np.linalg.norm(vecs, axis=1, keepdims=True)


def _simulated_histories(seed: int, n_tasks: int, n: int, k: int, d: int):
    """Play a meta agent through unit-norm context tasks and yield the
    per-task histories, round contexts, priors and meta-posterior path."""
    factory = StreamFactory(seed)
    sigma_q = generate_covariance(d, factory.stream("cov_q"))
    sigma_star = generate_covariance(d, factory.stream("cov_star"))
    v = 0.2
    meta_prior = GaussianBelief(np.zeros(d), sigma_q, v)
    mu_star = sample_gaussian(meta_prior, factory.stream("mu_star"))
    instance_prior = GaussianBelief(mu_star, sigma_star, v)
    agent = MetaTSLBAgent(meta_prior, sigma_star)
    tasks = []
    for s in range(1, n_tasks + 1):
        mu_s = sample_gaussian(instance_prior, factory.stream("instance", s))
        rounds = [
            RoundContexts(_unit_contexts(factory.stream("ctx", s, t), k, d), t)
            for t in range(1, n + 1)
        ]
        prior = agent.task_prior(s, factory.stream("task_prior", s))
        history, _ = run_ts_task(
            prior,
            BanditInstance(mu_s),
            lambda t, rounds=rounds: rounds[t - 1],
            n,
            SeededTaskStreams(factory, agent="verify", run=0, task=s),
        )
        before = agent.posterior
        agent.observe(history)
        tasks.append(
            {
                "history": history,
                "rounds": rounds,
                "prior": prior,
                "posterior_before": before,
                "posterior_after": agent.posterior,
            }
        )
    return tasks, sigma_star, sigma_q


def check_recursive_batch(seed: int = 7) -> CheckResult:
    """Sequential posterior recursion equals the one-shot batch solve."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    tol = 1e-9
    for case in range(25):
        d = int(rng.integers(1, 6))
        n = int(rng.integers(1, 120))
        cov = generate_covariance(d, rng)
        prior = GaussianBelief(rng.standard_normal(d), cov, 0.5)
        state = ts_init(prior)
        history = []
        for t in range(1, n + 1):
            b = rng.standard_normal(d)
            r = float(rng.standard_normal())
            state = ts_update(state, b, r)
            history.append(HistoryEntry(t, 0, b, r))
        precision, mean = batch_posterior(prior, history)
        diff = max(
            float(np.abs(precision - state.precision_core).max()),
            float(np.abs(mean - state.mean).max()),
        )
        worst = min(worst, tol - diff)
    return CheckResult(
        "recursive-batch", worst >= 0, worst, "max |recursion - batch| within 1e-9"
    )


def check_meta_two_path(seed: int = 11) -> CheckResult:
    """Both algebraic routes to the meta update agree to 1e-10."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    tol = 1e-10
    for case in range(25):
        d = int(rng.integers(1, 6))
        q = MetaPosterior(
            GaussianBelief(rng.standard_normal(d), generate_covariance(d, rng), 0.3),
            task_index=1,
        )
        sigma_star = generate_covariance(d, rng)
        history = [
            HistoryEntry(t, 0, rng.standard_normal(d), float(rng.standard_normal()))
            for t in range(1, int(rng.integers(1, 40)) + 1)
        ]
        one = meta_posterior_update(q, sigma_star, history)
        two = meta_posterior_update_alt(q, sigma_star, history)
        diff = max(
            float(np.abs(one.belief.cov_core - two.belief.cov_core).max()),
            float(np.abs(one.belief.mean - two.belief.mean).max()),
        )
        worst = min(worst, tol - diff)
    return CheckResult(
        "meta-two-path", worst >= 0, worst, "direct vs normal-equation route within 1e-10"
    )


def check_symmetry(seed: int = 13, fault: str | None = None) -> CheckResult:
    """Every meta covariance stays symmetric to 1e-10 along a simulated run."""
    tasks, _, _ = _simulated_histories(seed, n_tasks=6, n=40, k=4, d=3)
    tol = 1e-10
    worst = math.inf
    for item in tasks:
        cov = np.array(item["posterior_after"].belief.cov_core)
        if fault == "skip-symmetrize":
            cov = cov + np.triu(np.full(cov.shape, 1e-6), k=1)
        worst = min(worst, tol - max_asymmetry(cov))
    return CheckResult(
        "symmetry", worst >= 0, worst, "meta covariance asymmetry within 1e-10"
    )


def check_contraction(seed: int = 17) -> CheckResult:
    """Top meta-covariance eigenvalue contracts task over task."""
    worst = math.inf
    detail_runs = 6
    for run in range(detail_runs):
        tasks, sigma_star, sigma_q = _simulated_histories(
            seed + run, n_tasks=6, n=150, k=4, d=3
        )
        lam_min_inv = 1.0 / max_eigenvalue(sigma_star)
        if max_eigenvalue(sigma_q) < 2.0 / (175.0 * lam_min_inv):
            continue
        for item in tasks:
            lam_before = max_eigenvalue(item["posterior_before"].belief.cov_core)
            lam_after = max_eigenvalue(item["posterior_after"].belief.cov_core)
            bound = (7.0 / 8.0) * lam_before + 1.0 / (100.0 * lam_min_inv)
            worst = min(worst, bound - lam_after)
            worst = min(worst, lam_before - lam_after)
    return CheckResult(
        "contraction",
        worst >= 0,
        worst,
        "top eigenvalue below 7/8 previous + floor and strictly decreasing",
    )


def check_eigen_sum(seed: int = 19) -> CheckResult:
    """Summed inverse-root precision eigenvalues stay below the budget on
    trajectories whose growth assumption verifies round by round."""
    factory = StreamFactory(seed)
    d, k, n = 3, 3, 80
    window = d + 1
    rounds = [
        RoundContexts(_unit_contexts(factory.stream("ctx", t), k, d), t)
        for t in range(1, n + 1)
    ]
    b1 = np.eye(d)
    params = estimate_vartheta(lambda t: rounds[t - 1], n, window, b1, mode="exact")
    if params.vartheta is None:
        return CheckResult("eigen-sum", False, -math.inf, "rank-deficient windows")
    prior = GaussianBelief(np.zeros(d), np.eye(d), 0.2)
    failures = 0
    worst = math.inf
    for rep in range(8):
        mu = factory.stream("mu", rep).standard_normal(d) * 0.4
        history, _ = run_ts_task(
            prior,
            BanditInstance(mu),
            lambda t: rounds[t - 1],
            n,
            SeededTaskStreams(factory, agent=f"rep{rep}", run=0, task=1),
        )
        diag = trajectory_diagnostics(prior, rounds, history)
        report = check_eigen_sum_bound(diag, params)
        failures += not report.holds
        worst = min(worst, report.slack)
        ok_width, slack = check_posterior_width_bound(diag)
        failures += not ok_width
        worst = min(worst, slack)
    return CheckResult(
        "eigen-sum",
        failures == 0,
        worst,
        "inverse-root sum below budget and width factors below eigen floor",
    )


ALL_CHECKS = {
    "recursive-batch": check_recursive_batch,
    "meta-two-path": check_meta_two_path,
    "symmetry": check_symmetry,
    "contraction": check_contraction,
    "eigen-sum": check_eigen_sum,
}

_FAULT_AWARE = {"symmetry"}


def run_checks(
    names: list[str] | None = None, fault: str | None = None, seed: int = 0
) -> list[CheckResult]:
    if fault is not None and fault not in FAULT_MODES:
        raise ValueError(f"unknown fault mode {fault!r}")
    selected = list(ALL_CHECKS) if names is None else names
    unknown = [n for n in selected if n not in ALL_CHECKS]
    if unknown:
        raise ValueError(f"unknown checks: {unknown}")
    results = []
    for name in selected:
        fn = ALL_CHECKS[name]
        if fault is not None and name in _FAULT_AWARE:
            results.append(fn(fault=fault))
        else:
            results.append(fn())
    return results
