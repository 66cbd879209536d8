"""Meta-learning Thompson sampling for linear contextual bandits.

A library and CLI for simulating Thompson sampling agents whose task prior
is itself learned across a sequence of bandit tasks, together with three
problem variants (finite prior banks, polyhedral action sets, sequential
sub-bandits), computable regret-bound formulas and a reproducible
benchmark harness.
"""

from .core import (
    BanditInstance,
    GaussianBelief,
    HistoryEntry,
    InvalidBeliefError,
    RegretTrace,
    RoundContexts,
    TaskTrace,
    best_arm,
    instant_regret,
    sample_gaussian,
)
from .finite_priors import (
    PriorBank,
    finite_prior_select,
    finite_prior_update,
    mixture_moment_match,
    sample_prior_index,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    GeneralizationResult,
    generate_covariance,
    run_experiment,
    run_generalization,
)
from .linalg import NumericalError
from .meta import (
    MetaPosterior,
    marginal_task_belief,
    meta_posterior_update,
    meta_posterior_update_alt,
    run_marginal_ts,
    run_meta_ts,
    run_meta_tslb,
    run_oracle_ts,
)
from .polyhedron import Polyhedron, lp_argmax, lp_max_value, random_polyhedron
from .rng import StreamFactory, substream
from .sequential import SequentialSpec, hadamard_combiner, run_sequential_ts
from .theory import (
    AssumptionParams,
    BoundConstants,
    BoundInputs,
    PreconditionError,
    TrajectoryDiagnostics,
    bound_constants,
    check_eigen_sum_bound,
    check_generalization_threshold,
    check_posterior_width_bound,
    estimate_vartheta,
    theorem_rhs,
    trajectory_diagnostics,
)
from .ts import (
    PosteriorState,
    SeededTaskStreams,
    batch_posterior,
    run_ts_task,
    ts_init,
    ts_select,
    ts_update,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionParams",
    "BanditInstance",
    "BoundConstants",
    "BoundInputs",
    "ExperimentConfig",
    "ExperimentResult",
    "GaussianBelief",
    "GeneralizationResult",
    "HistoryEntry",
    "InvalidBeliefError",
    "MetaPosterior",
    "NumericalError",
    "Polyhedron",
    "PosteriorState",
    "PreconditionError",
    "PriorBank",
    "RegretTrace",
    "RoundContexts",
    "SeededTaskStreams",
    "SequentialSpec",
    "StreamFactory",
    "TaskTrace",
    "TrajectoryDiagnostics",
    "batch_posterior",
    "best_arm",
    "bound_constants",
    "check_eigen_sum_bound",
    "check_generalization_threshold",
    "check_posterior_width_bound",
    "estimate_vartheta",
    "finite_prior_select",
    "finite_prior_update",
    "generate_covariance",
    "hadamard_combiner",
    "instant_regret",
    "lp_argmax",
    "lp_max_value",
    "marginal_task_belief",
    "meta_posterior_update",
    "meta_posterior_update_alt",
    "mixture_moment_match",
    "random_polyhedron",
    "run_experiment",
    "run_generalization",
    "run_marginal_ts",
    "run_meta_ts",
    "run_meta_tslb",
    "run_oracle_ts",
    "run_sequential_ts",
    "run_ts_task",
    "sample_gaussian",
    "sample_prior_index",
    "substream",
    "theorem_rhs",
    "trajectory_diagnostics",
    "ts_init",
    "ts_select",
    "ts_update",
]
