"""A laboratory for symmetry breaking and cross-seed cross-play in small
cooperative games.

Train tabular softmax policies with entropy-regularized independent policy
gradients on tiny decentralized games, greedify them, and measure how well
policies from independent training runs play together. The package exposes
the environments, the trainer, exact and sampled evaluators, and objective
surfaces for a two-parameter shared policy; the `xplab` command line wraps
them with CSV and PNG outputs.
"""

from .core import (
    DecPomdpSpec,
    EnumerationBudgetError,
    ExactStats,
    Trajectory,
    enumerate_trajectories,
    exact_expectations,
    reachable_aohs,
    register_reachable_aohs,
    rollout,
    validate_spec,
)
from .envs import (
    CatDogSpec,
    TIE_TRAP_PAYOFF,
    TWO_CONVENTIONS_PAYOFF,
    build_env,
    env_digest,
    make_cat_dog,
    make_matrix_game,
    make_tie_trap_game,
    make_two_conventions_game,
)
from .evaluate import (
    EXACT,
    BlockAverages,
    CompositeJointPolicy,
    EvalMode,
    PolicyGroup,
    ScoreResult,
    TeamStats,
    XpMatrix,
    XpReport,
    block_average,
    build_report,
    cross_seed_teams,
    monte_carlo,
    sp_score,
    team_assignments,
    xp_matrix,
    xp_score,
)
from .landscape import SurfaceGrid, default_grid, j_alpha, shared_policy_surface
from .policy import (
    DEFAULT_TIE_EPSILON,
    FixedDistributionPolicy,
    MissingAohError,
    SharedSymmetricPolicy,
    TabularJointPolicy,
    greedify,
    load_policy,
    policy_entropy,
    save_policy,
    softmax,
    tie_tolerance_greedify,
)
from .train import (
    TabularCritic,
    TrainConfig,
    TrainResult,
    TrainingDivergedError,
    TrainingLog,
    critic_advantages,
    derive_cell_seed,
    exact_gradient,
    expected_grad_estimate,
    grad_estimate,
    greedy_decision_summary,
    objective_value,
    returns_to_go,
    run_sweep_cell,
    sweep_alpha,
    train,
)
from .version import VERSION as __version__

__all__ = [
    "DecPomdpSpec",
    "EnumerationBudgetError",
    "ExactStats",
    "Trajectory",
    "enumerate_trajectories",
    "exact_expectations",
    "reachable_aohs",
    "register_reachable_aohs",
    "rollout",
    "validate_spec",
    "CatDogSpec",
    "TIE_TRAP_PAYOFF",
    "TWO_CONVENTIONS_PAYOFF",
    "build_env",
    "env_digest",
    "make_cat_dog",
    "make_matrix_game",
    "make_tie_trap_game",
    "make_two_conventions_game",
    "EXACT",
    "BlockAverages",
    "CompositeJointPolicy",
    "EvalMode",
    "PolicyGroup",
    "ScoreResult",
    "TeamStats",
    "XpMatrix",
    "XpReport",
    "block_average",
    "build_report",
    "cross_seed_teams",
    "monte_carlo",
    "sp_score",
    "team_assignments",
    "xp_matrix",
    "xp_score",
    "SurfaceGrid",
    "default_grid",
    "j_alpha",
    "shared_policy_surface",
    "DEFAULT_TIE_EPSILON",
    "FixedDistributionPolicy",
    "MissingAohError",
    "SharedSymmetricPolicy",
    "TabularJointPolicy",
    "greedify",
    "load_policy",
    "policy_entropy",
    "save_policy",
    "softmax",
    "tie_tolerance_greedify",
    "TabularCritic",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "TrainingLog",
    "critic_advantages",
    "derive_cell_seed",
    "exact_gradient",
    "expected_grad_estimate",
    "grad_estimate",
    "greedy_decision_summary",
    "objective_value",
    "returns_to_go",
    "run_sweep_cell",
    "sweep_alpha",
    "train",
    "__version__",
]
