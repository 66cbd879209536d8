"""Config-driven benchmark harness with seeded Monte-Carlo runs.

One run draws the meta covariance, task covariance and true prior mean,
then plays every configured agent against identical instances, contexts
and reward noise, so all cross-agent comparisons are paired. Runs are
independent given (root seed, run index), which makes the work pool and
the serial path produce identical output files.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import (
    BanditInstance,
    GaussianBelief,
    RegretTrace,
    RoundContexts,
    sample_gaussian,
)
from .finite_priors import (
    BankSampleAgent,
    BankSelectAgent,
    PriorBank,
    mixture_moment_match,
)
from .linalg import max_eigenvalue, symmetrize
from .meta import (
    AGENT_NAMES,
    MARGINAL_TS,
    META_TS,
    META_TSLB,
    ORACLE_TS,
    MarginalTSAgent,
    MetaAgent,
    MetaTSAgent,
    MetaTSLBAgent,
    OracleTSAgent,
)
from .polyhedron import Polyhedron, lp_max_value, random_polyhedron, run_polyhedral_ts_task
from .rng import StreamFactory
from .sequential import (
    SequentialSpec,
    combined_value_tensor,
    hadamard_combiner,
    run_sequential_ts,
)
from .ts import run_ts_task

EXPERIMENTS = ("linear", "finite_priors", "infinite_arms", "sequential", "generalization")


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


class SimulationError(RuntimeError):
    """A run failed; carries the failing (run, task, round) coordinates."""

    def __init__(self, message: str, run: int, task: int | None = None, round: int | None = None):
        super().__init__(message)
        self.run = run
        self.task = task
        self.round = round


def _wrap_task_error(exc: Exception, agent_name: str, run: int, task: int) -> SimulationError:
    rnd = getattr(exc, "round", None)
    where = f"run {run}, task {task}" + (f", round {rnd}" if rnd is not None else "")
    return SimulationError(f"agent {agent_name} failed in {where}: {exc}", run, task, rnd)


@dataclass(frozen=True)
class ExperimentConfig:
    """All scenario parameters of one benchmark.

    Defaults are the standard benchmark scale: 20 tasks of 200 rounds
    averaged over 100 runs, reward noise 0.2, dimension 5, 20 arms,
    contexts uniform on [0, 50]^d, a 50-candidate prior bank, and a
    three-stage sequential instance with 20/15/5 arms.
    """

    experiment: str = "linear"
    m: int = 20
    n: int = 200
    k: int = 20
    d: int = 5
    runs: int = 100
    v: float = 0.2
    context_low: float = 0.0
    context_high: float = 50.0
    L: int = 50
    p: int = 3
    arm_counts: tuple[int, ...] = (20, 15, 5)
    epsilon_norms: tuple[float, ...] = (0.0, 1.0, 3.0, 6.0)
    root_seed: int = 20240817
    agents: tuple[str, ...] = AGENT_NAMES
    normalize_contexts: bool = False
    shared_contexts: bool = False
    threads: int = 1
    env_log: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        for name, value in (
            ("m", self.m),
            ("n", self.n),
            ("k", self.k),
            ("d", self.d),
            ("runs", self.runs),
            ("L", self.L),
            ("p", self.p),
            ("threads", self.threads),
        ):
            if int(value) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.v <= 0:
            raise ConfigError("v must be positive")
        if self.context_high <= self.context_low:
            raise ConfigError("context_high must exceed context_low")
        counts = tuple(int(x) for x in self.arm_counts)
        if len(counts) != self.p:
            raise ConfigError("arm_counts length must equal p")
        object.__setattr__(self, "arm_counts", counts)
        norms = tuple(float(x) for x in self.epsilon_norms)
        if any(x < 0 for x in norms):
            raise ConfigError("epsilon norms must be nonnegative")
        object.__setattr__(self, "epsilon_norms", norms)
        agents = tuple(self.agents)
        if not agents:
            raise ConfigError("at least one agent is required")
        unknown = [a for a in agents if a not in AGENT_NAMES]
        if unknown:
            raise ConfigError(f"unknown agents: {unknown}")
        object.__setattr__(self, "agents", agents)
        if not (-(2**63) <= int(self.root_seed) < 2**64):
            raise ConfigError("root_seed must fit in 64 bits")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["arm_counts"] = list(self.arm_counts)
        data["epsilon_norms"] = list(self.epsilon_norms)
        data["agents"] = list(self.agents)
        return data


@dataclass(frozen=True)
class GeneralizationDraw:
    """Realized mean shift of one run's transfer phase."""

    epsilon: np.ndarray
    norm: float
    phase1_tasks: int
    phase2_tasks: int

    def __post_init__(self):
        eps = np.asarray(self.epsilon, dtype=float)
        if abs(float(np.linalg.norm(eps)) - self.norm) > 1e-12:
            raise ValueError("epsilon norm deviates from the requested norm")
        object.__setattr__(self, "epsilon", eps)


def generate_covariance(
    d: int, rng: np.random.Generator, max_entry: float = 3.0
) -> np.ndarray:
    """Random symmetric PD covariance core with every entry below
    ``max_entry`` in magnitude and, for d >= 2, at least one nonzero
    off-diagonal entry."""
    if d < 1:
        raise ValueError("d must be >= 1")
    while True:
        m = rng.uniform(-1.0, 1.0, size=(d, d))
        cov = symmetrize(m @ m.T / d + 0.05 * np.eye(d))
        peak = float(np.abs(cov).max())
        limit = 0.99 * max_entry
        if peak > limit:
            cov = cov * (limit / peak)
        if d >= 2 and not np.any(np.abs(cov - np.diag(np.diag(cov))) > 0):
            continue
        return cov


def _draw_contexts(
    cfg: ExperimentConfig, factory: StreamFactory, run: int, task: int, t: int, k: int
) -> np.ndarray:
    ctx_task = 0 if cfg.shared_contexts else task
    rng = factory.stream("contexts", run, ctx_task, t)
    vecs = rng.uniform(cfg.context_low, cfg.context_high, size=(k, cfg.d))
    if cfg.normalize_contexts:
        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
        vecs = vecs / np.maximum(norms, 1.0)
    return vecs


def _reward_noise(
    cfg: ExperimentConfig, factory: StreamFactory, run: int, task: int
) -> np.ndarray:
    return np.array(
        [
            factory.stream("reward", run, task, t).standard_normal()
            for t in range(1, cfg.n + 1)
        ]
    )


class _ArrayTaskStreams:
    """TaskStreams over a precomputed noise vector.

    The posterior substream is keyed by (run, task, round) only: every
    agent consumes the same standard-normal sequence, so cross-agent regret
    differences reflect the agents' priors rather than sampling luck
    (common random numbers). Environment noise comes precomputed.
    """

    __slots__ = ("factory", "agent", "run", "task", "noise")

    def __init__(self, factory, agent, run, task, noise):
        self.factory = factory
        self.agent = agent
        self.run = run
        self.task = task
        self.noise = noise

    def posterior(self, t: int) -> np.random.Generator:
        return self.factory.stream("posterior", self.run, self.task, t)

    def reward_noise(self, t: int) -> float:
        return float(self.noise[t - 1])


def _build_gaussian_agents(
    names: Sequence[str],
    meta_prior: GaussianBelief,
    instance_prior: GaussianBelief,
) -> list[MetaAgent]:
    agents: list[MetaAgent] = []
    for name in names:
        if name == META_TSLB:
            agents.append(MetaTSLBAgent(meta_prior, instance_prior.cov_core))
        elif name == META_TS:
            agents.append(MetaTSAgent(meta_prior, instance_prior.cov_core))
        elif name == ORACLE_TS:
            agents.append(OracleTSAgent(instance_prior))
        elif name == MARGINAL_TS:
            agents.append(MarginalTSAgent(meta_prior, instance_prior.cov_core))
        else:
            raise ConfigError(f"unknown agent {name!r}")
    return agents


def _run_gaussian_tasks(
    cfg: ExperimentConfig,
    factory: StreamFactory,
    run: int,
    agents: list[MetaAgent],
    instances: list[np.ndarray],
    rounds_per_task: Callable[[int], list[RoundContexts]],
    noise_per_task: Callable[[int], np.ndarray],
    mu_star: np.ndarray | None,
) -> tuple[dict[str, np.ndarray], dict]:
    """Play every agent through the same m tasks; returns per-agent instant
    regret arrays and meta-trajectory diagnostics."""
    m, n = cfg.m, cfg.n
    out = {agent.name: np.empty((m, n)) for agent in agents}
    diag: dict = {"agents": {}}
    values_cache: dict[int, np.ndarray] = {}

    def values_per_task(s: int) -> np.ndarray:
        if s not in values_cache:
            stacked = np.stack([rc.vectors for rc in rounds_per_task(s)])
            values_cache[s] = stacked @ instances[s - 1]
        return values_cache[s]

    for agent in agents:
        is_meta = isinstance(agent, MetaTSLBAgent)
        lam_seq: list[float] = []
        err_seq: list[float] = []
        if is_meta:
            lam_seq.append(max_eigenvalue(agent.posterior.belief.cov_core))
        for s in range(1, m + 1):
            if is_meta and mu_star is not None:
                err_seq.append(
                    float(np.linalg.norm(agent.posterior.belief.mean - mu_star))
                )
            prior = agent.task_prior(s, factory.stream("task_prior", agent.name, run, s))
            rounds = rounds_per_task(s)
            streams = _ArrayTaskStreams(factory, agent.name, run, s, noise_per_task(s))
            try:
                history, trace = run_ts_task(
                    prior,
                    BanditInstance(instances[s - 1]),
                    lambda t, rounds=rounds: rounds[t - 1],
                    n,
                    streams,
                    true_values=values_per_task(s),
                )
            except Exception as exc:
                raise _wrap_task_error(exc, agent.name, run, s) from exc
            agent.observe(history)
            if is_meta:
                lam_seq.append(max_eigenvalue(agent.posterior.belief.cov_core))
            out[agent.name][s - 1] = trace.instant
        if is_meta:
            diag["agents"][agent.name] = {
                "lambda_max": np.array(lam_seq),
                "mean_err": np.array(err_seq),
            }
    return out, diag


@dataclass
class _GaussianRunEnv:
    """Per-run hierarchy draws shared by every Gaussian-prior experiment."""

    sigma_q: np.ndarray
    sigma_star: np.ndarray
    meta_prior: GaussianBelief
    mu_star: np.ndarray
    instance_prior: GaussianBelief
    instances: list[np.ndarray]

    def eigen_diag(self) -> dict:
        lam_min_star_inv = 1.0 / max_eigenvalue(self.sigma_star)
        lam_q = max_eigenvalue(self.sigma_q)
        return {
            "lambda_min_star_inv": lam_min_star_inv,
            "lambda_max_sigma_q": lam_q,
            "eigencondition_ok": lam_q >= 2.0 / (175.0 * lam_min_star_inv),
        }


def _draw_run_env(cfg: ExperimentConfig, factory: StreamFactory, run: int) -> _GaussianRunEnv:
    sigma_q = generate_covariance(cfg.d, factory.stream("cov_q", run))
    sigma_star = generate_covariance(cfg.d, factory.stream("cov_star", run))
    meta_prior = GaussianBelief(np.zeros(cfg.d), sigma_q, cfg.v)
    mu_star = sample_gaussian(meta_prior, factory.stream("mu_star", run))
    instance_prior = GaussianBelief(mu_star, sigma_star, cfg.v)
    instances = [
        sample_gaussian(instance_prior, factory.stream("instance", run, s))
        for s in range(1, cfg.m + 1)
    ]
    return _GaussianRunEnv(sigma_q, sigma_star, meta_prior, mu_star, instance_prior, instances)


def _run_single_linear(cfg: ExperimentConfig, run: int) -> dict:
    factory = StreamFactory(cfg.root_seed)
    env = _draw_run_env(cfg, factory, run)
    rounds_cache: dict[int, list[RoundContexts]] = {}
    noise_cache: dict[int, np.ndarray] = {}

    def rounds_per_task(s: int) -> list[RoundContexts]:
        if s not in rounds_cache:
            rounds_cache[s] = [
                RoundContexts(_draw_contexts(cfg, factory, run, s, t, cfg.k), t)
                for t in range(1, cfg.n + 1)
            ]
        return rounds_cache[s]

    def noise_per_task(s: int) -> np.ndarray:
        if s not in noise_cache:
            noise_cache[s] = _reward_noise(cfg, factory, run, s)
        return noise_cache[s]

    agents = _build_gaussian_agents(cfg.agents, env.meta_prior, env.instance_prior)
    out, diag = _run_gaussian_tasks(
        cfg, factory, run, agents, env.instances, rounds_per_task, noise_per_task, env.mu_star
    )
    diag.update(env.eigen_diag())
    if cfg.env_log:
        diag["env_log"] = _hash_env(cfg, rounds_cache, noise_cache, run)
    return {"instant": out, "diag": diag}


def _hash_env(cfg, rounds_cache, noise_cache, run) -> list[tuple[int, int, int, str]]:
    rows = []
    for s in sorted(rounds_cache):
        noise = noise_cache.get(s)
        for t, rc in enumerate(rounds_cache[s], start=1):
            h = hashlib.blake2b(rc.vectors.tobytes(), digest_size=8)
            if noise is not None:
                h.update(np.float64(noise[t - 1]).tobytes())
            rows.append((run, s, t, h.hexdigest()))
    return rows


def _run_single_finite(cfg: ExperimentConfig, run: int) -> dict:
    factory = StreamFactory(cfg.root_seed)
    priors = []
    for j in range(cfg.L):
        mean = factory.stream("bank_mean", run, j).uniform(-1.0, 1.0, size=cfg.d)
        cov = generate_covariance(cfg.d, factory.stream("bank_cov", run, j))
        priors.append(GaussianBelief(mean, cov, cfg.v))
    bank = PriorBank.uniform(priors)
    j_star = int(factory.stream("true_prior", run).integers(cfg.L))
    instance_prior = bank.priors[j_star]
    instances = [
        sample_gaussian(instance_prior, factory.stream("instance", run, s))
        for s in range(1, cfg.m + 1)
    ]

    rounds_cache: dict[int, list[RoundContexts]] = {}
    noise_cache: dict[int, np.ndarray] = {}

    def rounds_per_task(s: int) -> list[RoundContexts]:
        if s not in rounds_cache:
            rounds_cache[s] = [
                RoundContexts(_draw_contexts(cfg, factory, run, s, t, cfg.k), t)
                for t in range(1, cfg.n + 1)
            ]
        return rounds_cache[s]

    def noise_per_task(s: int) -> np.ndarray:
        if s not in noise_cache:
            noise_cache[s] = _reward_noise(cfg, factory, run, s)
        return noise_cache[s]

    agents: list[MetaAgent] = []
    for name in cfg.agents:
        if name == META_TSLB:
            agents.append(BankSelectAgent(bank, name=name))
        elif name == META_TS:
            agents.append(BankSampleAgent(bank, name=name))
        elif name == ORACLE_TS:
            agents.append(OracleTSAgent(instance_prior))
        elif name == MARGINAL_TS:
            agents.append(OracleTSAgent(mixture_moment_match(bank), name=name))
    out: dict[str, np.ndarray] = {agent.name: np.empty((cfg.m, cfg.n)) for agent in agents}
    diag: dict = {"j_star": j_star, "agents": {}}
    for agent in agents:
        selected: list[int] = []
        true_weight: list[float] = []
        for s in range(1, cfg.m + 1):
            if isinstance(agent, BankSelectAgent):
                selected.append(int(np.argmax(agent.bank.weights)))
                true_weight.append(float(agent.bank.weights[j_star]))
            prior = agent.task_prior(s, factory.stream("task_prior", agent.name, run, s))
            rounds = rounds_per_task(s)
            streams = _ArrayTaskStreams(factory, agent.name, run, s, noise_per_task(s))
            try:
                history, trace = run_ts_task(
                    prior,
                    BanditInstance(instances[s - 1]),
                    lambda t, rounds=rounds: rounds[t - 1],
                    cfg.n,
                    streams,
                )
            except Exception as exc:
                raise _wrap_task_error(exc, agent.name, run, s) from exc
            agent.observe(history)
            out[agent.name][s - 1] = trace.instant
        if isinstance(agent, BankSelectAgent):
            selected.append(int(np.argmax(agent.bank.weights)))
            true_weight.append(float(agent.bank.weights[j_star]))
            diag["agents"][agent.name] = {
                "selected": np.array(selected),
                "true_weight": np.array(true_weight),
            }
    return {"instant": out, "diag": diag}


def _run_single_infinite(cfg: ExperimentConfig, run: int) -> dict:
    factory = StreamFactory(cfg.root_seed)
    env = _draw_run_env(cfg, factory, run)
    instances = env.instances

    poly_cache: dict[int, list[Polyhedron]] = {}
    opt_cache: dict[int, np.ndarray] = {}
    noise_cache: dict[int, np.ndarray] = {}

    def polys_per_task(s: int) -> list[Polyhedron]:
        if s not in poly_cache:
            ctx_task = 0 if cfg.shared_contexts else s
            poly_cache[s] = [
                random_polyhedron(cfg.d, factory.stream("contexts", run, ctx_task, t))
                for t in range(1, cfg.n + 1)
            ]
        return poly_cache[s]

    def opts_per_task(s: int) -> np.ndarray:
        if s not in opt_cache:
            mu = instances[s - 1]
            opt_cache[s] = np.array(
                [lp_max_value(poly, mu) for poly in polys_per_task(s)]
            )
        return opt_cache[s]

    def noise_per_task(s: int) -> np.ndarray:
        if s not in noise_cache:
            noise_cache[s] = _reward_noise(cfg, factory, run, s)
        return noise_cache[s]

    agents = _build_gaussian_agents(cfg.agents, env.meta_prior, env.instance_prior)
    out = {agent.name: np.empty((cfg.m, cfg.n)) for agent in agents}
    diag: dict = {"agents": {}}
    for agent in agents:
        is_meta = isinstance(agent, MetaTSLBAgent)
        lam_seq = [max_eigenvalue(agent.posterior.belief.cov_core)] if is_meta else []
        for s in range(1, cfg.m + 1):
            prior = agent.task_prior(s, factory.stream("task_prior", agent.name, run, s))
            streams = _ArrayTaskStreams(factory, agent.name, run, s, noise_per_task(s))
            try:
                history, trace = run_polyhedral_ts_task(
                    prior,
                    BanditInstance(instances[s - 1]),
                    polys_per_task(s),
                    cfg.n,
                    streams,
                    optimal_values=opts_per_task(s),
                )
            except Exception as exc:
                raise _wrap_task_error(exc, agent.name, run, s) from exc
            agent.observe(history)
            if is_meta:
                lam_seq.append(max_eigenvalue(agent.posterior.belief.cov_core))
            out[agent.name][s - 1] = trace.instant
        if is_meta:
            diag["agents"][agent.name] = {"lambda_max": np.array(lam_seq)}
    diag.update(env.eigen_diag())
    return {"instant": out, "diag": diag}


def _run_single_sequential(cfg: ExperimentConfig, run: int) -> dict:
    factory = StreamFactory(cfg.root_seed)
    env = _draw_run_env(cfg, factory, run)
    instances = env.instances
    spec = SequentialSpec(
        arm_counts=cfg.arm_counts,
        gamma=hadamard_combiner,
        initial_arms=tuple(0 for _ in cfg.arm_counts),
        dim=cfg.d,
    )

    ctx_cache: dict[int, list[list[np.ndarray]]] = {}
    opt_cache: dict[int, np.ndarray] = {}
    noise_cache: dict[int, np.ndarray] = {}

    def contexts_per_task(s: int) -> list[list[np.ndarray]]:
        if s not in ctx_cache:
            ctx_task = 0 if cfg.shared_contexts else s
            per_round = []
            for t in range(1, cfg.n + 1):
                rng = factory.stream("contexts", run, ctx_task, t)
                mats = []
                for k_i in cfg.arm_counts:
                    vecs = rng.uniform(cfg.context_low, cfg.context_high, size=(k_i, cfg.d))
                    if cfg.normalize_contexts:
                        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
                        vecs = vecs / np.maximum(norms, 1.0)
                    mats.append(vecs)
                per_round.append(mats)
            ctx_cache[s] = per_round
        return ctx_cache[s]

    def opts_per_task(s: int) -> np.ndarray:
        if s not in opt_cache:
            mu = instances[s - 1]
            rounds = contexts_per_task(s)
            opt_cache[s] = np.array(
                [float((combined_value_tensor(spec, ctx) @ mu).max()) for ctx in rounds]
            )
        return opt_cache[s]

    def noise_per_task(s: int) -> np.ndarray:
        if s not in noise_cache:
            noise_cache[s] = _reward_noise(cfg, factory, run, s)
        return noise_cache[s]

    agents = _build_gaussian_agents(cfg.agents, env.meta_prior, env.instance_prior)
    out = {agent.name: np.empty((cfg.m, cfg.n)) for agent in agents}
    diag: dict = {"agents": {}}
    for agent in agents:
        is_meta = isinstance(agent, MetaTSLBAgent)
        lam_seq = [max_eigenvalue(agent.posterior.belief.cov_core)] if is_meta else []
        for s in range(1, cfg.m + 1):
            prior = agent.task_prior(s, factory.stream("task_prior", agent.name, run, s))
            rounds = contexts_per_task(s)
            streams = _ArrayTaskStreams(factory, agent.name, run, s, noise_per_task(s))
            try:
                history, trace = run_sequential_ts(
                    spec,
                    prior,
                    BanditInstance(instances[s - 1]),
                    cfg.n,
                    lambda t, rounds=rounds: rounds[t - 1],
                    streams,
                    optimal_values=opts_per_task(s),
                )
            except Exception as exc:
                raise _wrap_task_error(exc, agent.name, run, s) from exc
            agent.observe(history)
            if is_meta:
                lam_seq.append(max_eigenvalue(agent.posterior.belief.cov_core))
            out[agent.name][s - 1] = trace.instant
        if is_meta:
            diag["agents"][agent.name] = {"lambda_max": np.array(lam_seq)}
    diag.update(env.eigen_diag())
    return {"instant": out, "diag": diag}


def _epsilon_direction(factory: StreamFactory, run: int, d: int) -> np.ndarray:
    raw = factory.stream("epsilon", run).standard_normal(d)
    return raw / np.linalg.norm(raw)


def _run_single_generalization(cfg: ExperimentConfig, run: int) -> dict:
    """Learn on the source tasks, then restart on mean-shifted tasks from
    the learned meta-posterior, once per configured shift norm."""
    factory = StreamFactory(cfg.root_seed)
    env = _draw_run_env(cfg, factory, run)
    sigma_star = env.sigma_star
    meta_prior = env.meta_prior
    mu_star = env.mu_star

    p1 = factory.scoped("phase1")
    instances1 = [
        sample_gaussian(env.instance_prior, p1.stream("instance", run, s))
        for s in range(1, cfg.m + 1)
    ]
    rounds1: dict[int, list[RoundContexts]] = {}
    noise1: dict[int, np.ndarray] = {}

    def rounds_per_task1(s: int) -> list[RoundContexts]:
        if s not in rounds1:
            rounds1[s] = [
                RoundContexts(_draw_contexts(cfg, p1, run, s, t, cfg.k), t)
                for t in range(1, cfg.n + 1)
            ]
        return rounds1[s]

    def noise_per_task1(s: int) -> np.ndarray:
        if s not in noise1:
            noise1[s] = _reward_noise(cfg, p1, run, s)
        return noise1[s]

    learners: list[MetaTSLBAgent] = []
    if META_TSLB in cfg.agents:
        learners.append(MetaTSLBAgent(meta_prior, sigma_star))
    if META_TS in cfg.agents:
        learners.append(MetaTSAgent(meta_prior, sigma_star))
    _run_gaussian_tasks(
        cfg, p1, run, learners, instances1, rounds_per_task1, noise_per_task1, mu_star
    )
    learned = {agent.name: agent.posterior.belief for agent in learners}

    direction = _epsilon_direction(factory, run, cfg.d)

    p2 = factory.scoped("phase2")
    base_noise_prior = GaussianBelief(np.zeros(cfg.d), sigma_star, cfg.v)
    instance_offsets = [
        sample_gaussian(base_noise_prior, p2.stream("instance", run, s))
        for s in range(1, cfg.m + 1)
    ]
    rounds2: dict[int, list[RoundContexts]] = {}
    noise2: dict[int, np.ndarray] = {}

    def rounds_per_task2(s: int) -> list[RoundContexts]:
        if s not in rounds2:
            rounds2[s] = [
                RoundContexts(_draw_contexts(cfg, p2, run, s, t, cfg.k), t)
                for t in range(1, cfg.n + 1)
            ]
        return rounds2[s]

    def noise_per_task2(s: int) -> np.ndarray:
        if s not in noise2:
            noise2[s] = _reward_noise(cfg, p2, run, s)
        return noise2[s]

    per_norm: dict[float, dict[str, np.ndarray]] = {}
    draws: dict[float, dict] = {}
    for norm in cfg.epsilon_norms:
        epsilon = norm * direction if norm > 0 else np.zeros(cfg.d)
        draw = GeneralizationDraw(epsilon, norm, cfg.m, cfg.m)
        shifted_mean = mu_star + epsilon
        shifted_prior = GaussianBelief(shifted_mean, sigma_star, cfg.v)
        instances2 = [shifted_mean + off for off in instance_offsets]
        agents: list[MetaAgent] = []
        for name in cfg.agents:
            if name == META_TSLB:
                agents.append(MetaTSLBAgent(learned[META_TSLB], sigma_star))
            elif name == META_TS:
                agents.append(MetaTSAgent(learned[META_TS], sigma_star))
            elif name == ORACLE_TS:
                agents.append(OracleTSAgent(shifted_prior))
            elif name == MARGINAL_TS:
                agents.append(MarginalTSAgent(meta_prior, sigma_star))
        out, _ = _run_gaussian_tasks(
            cfg, p2, run, agents, instances2, rounds_per_task2, noise_per_task2, shifted_mean
        )
        per_norm[norm] = out
        draws[norm] = {"epsilon": draw.epsilon, "norm": norm}
    return {"per_norm": per_norm, "draws": draws}


_RUNNERS = {
    "linear": _run_single_linear,
    "finite_priors": _run_single_finite,
    "infinite_arms": _run_single_infinite,
    "sequential": _run_single_sequential,
}


def _worker(payload: tuple[dict, int]) -> tuple[int, dict]:
    cfg_dict, run = payload
    cfg = ExperimentConfig.from_dict(cfg_dict)
    if cfg.experiment == "generalization":
        return run, _run_single_generalization(cfg, run)
    return run, _RUNNERS[cfg.experiment](cfg, run)


def _map_runs(cfg: ExperimentConfig) -> list[tuple[int, dict]]:
    payloads = [(cfg.to_dict(), run) for run in range(cfg.runs)]
    if cfg.threads <= 1:
        results = [_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_worker, payloads))
    return sorted(results, key=lambda item: item[0])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trace: RegretTrace
    diagnostics: list[dict]
    env_log: list[tuple[int, int, int, str]] = field(default_factory=list)

    @property
    def summary_rows(self) -> list[tuple[str, int, float, float]]:
        return self.trace.summary_rows()


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute every configured run of a non-transfer experiment."""
    if config.experiment == "generalization":
        raise ConfigError("use run_generalization for the transfer experiment")
    results = _map_runs(config)
    trace = RegretTrace(config.m, config.n)
    diagnostics = []
    env_log: list[tuple[int, int, int, str]] = []
    for run, payload in results:
        for agent in config.agents:
            if agent in payload["instant"]:
                trace.add_run(run, agent, payload["instant"][agent])
        diag = payload["diag"]
        env_log.extend(diag.pop("env_log", []))
        diagnostics.append(diag)
    return ExperimentResult(config, trace, diagnostics, env_log)


@dataclass
class GeneralizationResult:
    config: ExperimentConfig
    traces: dict[float, RegretTrace]
    draws: list[dict]

    def summary_rows(self, norm: float) -> list[tuple[str, int, float, float]]:
        return self.traces[norm].summary_rows()


def run_generalization(config: ExperimentConfig) -> GeneralizationResult:
    """Execute the transfer experiment across every configured shift norm."""
    if config.experiment != "generalization":
        raise ConfigError("config.experiment must be 'generalization'")
    results = _map_runs(config)
    traces = {norm: RegretTrace(config.m, config.n) for norm in config.epsilon_norms}
    draws: list[dict] = []
    for run, payload in results:
        for norm in config.epsilon_norms:
            for agent, instant in payload["per_norm"][norm].items():
                traces[norm].add_run(run, agent, instant)
        draws.append(payload["draws"])
    return GeneralizationResult(config, traces, draws)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_trace_csv(trace: RegretTrace, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("run,task,round,agent,instant_regret,cumulative_regret\n")
        for run, task, rnd, agent, inst, cum in trace.iter_records():
            fh.write(f"{run},{task},{rnd},{agent},{_fmt(inst)},{_fmt(cum)}\n")


def write_summary_csv(rows: Sequence[tuple[str, int, float, float]], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("agent,task,mean_cumulative_regret,stderr\n")
        for agent, task, mean, stderr in rows:
            fh.write(f"{agent},{task},{_fmt(mean)},{_fmt(stderr)}\n")


def write_env_log_csv(rows: Sequence[tuple[int, int, int, str]], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("run,task,round,context_hash\n")
        for run, task, rnd, digest in rows:
            fh.write(f"{run},{task},{rnd},{digest}\n")
