"""Entropy-regularized independent policy gradients for tabular policies.

The trainer ascends the score-function gradient of the shared return plus an
entropy term weighted by `entropy_coefficient`. Two entropy gradients are
offered:

* ``entropy_mode="bonus"`` (the trainer default): each decision receives the
  bonus coefficient ``-alpha * log pi(a_t | tau_t)`` for its own action only.
  In expectation this is the gradient of the policy entropy at the visited
  decision points, holding the visitation distribution fixed. It is the form
  most implementations use, and at high alpha it rewards reaching states
  whose available actions the policy currently randomizes over, without
  crediting actions for steering the episode toward high-entropy futures.

* ``entropy_mode="objective"``: additionally credits each decision with
  ``alpha`` times the total policy entropy (all agents) accrued strictly
  after it. With this term the estimator is, in expectation, the exact
  gradient of ``J + alpha * E[sum_t sum_i H(pi_i(. | tau_i_t))]`` for
  discount 1; `exact_gradient` defaults to this mode so finite differences of
  `objective_value` match it.

The two modes coincide on one-step games.

Advantages are either raw Monte Carlo returns-to-go or lambda-weighted
temporal differences against a tabular critic; with a zero critic and
lambda 1 the two are bit-for-bit identical. Baselines ("batch-mean" per time
index, or a per-AOH exponential moving average) are subtracted from the
advantage only, never from the entropy bonus, and do not change the
estimator's expectation.

Sampled batches and exact enumeration share one gradient accumulator that
weights per-trajectory contributions (1/N for a batch, the trajectory
probability for enumeration), so `expected_grad_estimate` is the exact
average of `grad_estimate` over infinite batches with the same baseline
state.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    DEFAULT_NODE_BUDGET,
    DecPomdpSpec,
    Trajectory,
    aoh_key,
    enumerate_trajectories,
    exact_expectations,
    reachable_aohs,
    register_reachable_aohs,
    rollout,
)
from .envs import build_env, env_digest
from .hashing import canonical_digest
from .policy import (
    DEFAULT_TIE_EPSILON,
    SharedSymmetricPolicy,
    TabularJointPolicy,
    policy_entropy,
    policy_from_payload,
    policy_payload,
)
from .version import VERSION

_SCHEDULES = ("constant", "harmonic")
_BASELINES = ("none", "batch-mean", "per-aoh-ema")
_ADVANTAGE_MODES = ("monte-carlo", "lambda-critic")
_ENTROPY_MODES = ("bonus", "objective")
_PARAMETRIZATIONS = ("tabular", "shared-symmetric")
_ESTIMATORS = ("sampled", "expected")


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    `step_schedule` "constant" uses `learning_rate` at every iteration;
    "harmonic" uses `learning_rate / k` at iteration k (from 1), which damps
    late-stage sampling noise.

    `gradient_estimator` "sampled" draws `batch_size` episodes per iteration;
    "expected" replaces the batch with the estimator's exact expectation
    (enumerating the game tree), giving the deterministic gradient flow of
    the same objective. Expected steps have no sampling noise, so a noisy
    symmetry-breaking phase can hand its policy to an expected phase that
    converges the remaining distance, pinning near-exact ties.
    """

    entropy_coefficient: float = 0.0
    iterations: int = 200
    batch_size: int = 64
    learning_rate: float = 0.1
    step_schedule: str = "constant"
    gradient_estimator: str = "sampled"
    baseline: str = "batch-mean"
    baseline_decay: float = 0.99
    advantage_mode: str = "monte-carlo"
    advantage_lambda: float = 1.0
    critic_learning_rate: float = 0.1
    critic_frozen: bool = False
    entropy_mode: str = "bonus"
    parametrization: str = "tabular"
    init_noise_scale: float = 0.5
    max_grad_norm: float = 100.0
    seed: int = 0

    def validate(self) -> None:
        if self.entropy_coefficient < 0.0:
            raise ValueError("entropy_coefficient must be nonnegative")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.step_schedule not in _SCHEDULES:
            raise ValueError(f"step_schedule must be one of {_SCHEDULES}")
        if self.baseline not in _BASELINES:
            raise ValueError(f"baseline must be one of {_BASELINES}")
        if not 0.0 <= self.baseline_decay < 1.0:
            raise ValueError("baseline_decay must be in [0, 1)")
        if self.advantage_mode not in _ADVANTAGE_MODES:
            raise ValueError(f"advantage_mode must be one of {_ADVANTAGE_MODES}")
        if not 0.0 <= self.advantage_lambda <= 1.0:
            raise ValueError("advantage_lambda must be in [0, 1]")
        if self.critic_learning_rate <= 0.0:
            raise ValueError("critic_learning_rate must be positive")
        if self.entropy_mode not in _ENTROPY_MODES:
            raise ValueError(f"entropy_mode must be one of {_ENTROPY_MODES}")
        if self.parametrization not in _PARAMETRIZATIONS:
            raise ValueError(f"parametrization must be one of {_PARAMETRIZATIONS}")
        if self.gradient_estimator not in _ESTIMATORS:
            raise ValueError(f"gradient_estimator must be one of {_ESTIMATORS}")
        if self.gradient_estimator == "expected":
            if self.baseline == "per-aoh-ema":
                raise ValueError(
                    "the expected estimator does not keep a running baseline; "
                    "use baseline 'none' or 'batch-mean'"
                )
            if self.advantage_mode == "lambda-critic" and not self.critic_frozen:
                raise ValueError(
                    "the expected estimator only supports a frozen critic; "
                    "set critic_frozen or use sampled batches"
                )
        if self.init_noise_scale < 0.0:
            raise ValueError("init_noise_scale must be nonnegative")
        if self.max_grad_norm <= 0.0:
            raise ValueError("max_grad_norm must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ValueError(f"unknown training option {key!r}")
        config = cls(**data)
        config.validate()
        return config

    def digest(self) -> str:
        return canonical_digest(self.to_dict())


class TrainingDivergedError(RuntimeError):
    """The gradient became non-finite; `log` holds the iterations before it."""

    def __init__(self, iteration: int, log: "TrainingLog"):
        super().__init__(
            f"training diverged at iteration {iteration} (non-finite gradient); "
            "lower the learning rate or raise the batch size"
        )
        self.iteration = iteration
        self.log = log


# -- returns, critics, baselines ----------------------------------------------

def returns_to_go(traj: Trajectory, discount: float) -> np.ndarray:
    """G_t = r_t + discount * G_{t+1}, one entry per step."""
    steps = traj.steps
    out = np.empty(len(steps))
    g = 0.0
    for t in range(len(steps) - 1, -1, -1):
        g = steps[t].reward + discount * g
        out[t] = g
    return out


class TabularCritic:
    """Per-agent AOH value table; unknown AOHs read as 0."""

    def __init__(self, num_agents: int, learning_rate: float = 0.1):
        self.num_agents = num_agents
        self.learning_rate = learning_rate
        self._values: list[dict[tuple, float]] = [dict() for _ in range(num_agents)]

    def value(self, agent: int, aoh) -> float:
        return self._values[agent].get(aoh, 0.0)

    def set_value(self, agent: int, aoh, value: float) -> None:
        self._values[agent][aoh] = float(value)

    def update(self, agent: int, aoh, target: float) -> None:
        old = self._values[agent].get(aoh, 0.0)
        self._values[agent][aoh] = old + self.learning_rate * (target - old)

    def items(self, agent: int):
        return self._values[agent].items()


def critic_advantages(traj: Trajectory, critic: TabularCritic, discount: float,
                      lam: float) -> np.ndarray:
    """Lambda-weighted advantages per (agent, step).

    A_t = delta_t + discount*lam*A_{t+1} with delta_t = r_t + discount*V(tau_{t+1})
    - V(tau_t); the value of the AOH after the final step is 0 because the
    episode is over. With a zero critic and lam 1 this reduces, operation for
    operation, to the Monte Carlo returns-to-go.
    """
    steps = traj.steps
    horizon = len(steps)
    n = len(traj.aohs[0])
    adv = np.empty((n, horizon))
    glam = discount * lam
    for i in range(n):
        a_next = 0.0
        v_next = 0.0
        for t in range(horizon - 1, -1, -1):
            v_t = critic.value(i, traj.aohs[t][i])
            delta = steps[t].reward + discount * v_next - v_t
            a_next = delta + glam * a_next
            adv[i, t] = a_next
            v_next = v_t
    return adv


class _EmaBaseline:
    """Exponential moving average of observed returns-to-go per (agent, AOH)."""

    def __init__(self, decay: float):
        self.decay = decay
        self._values: dict[tuple[int, tuple], float] = {}

    def value(self, agent: int, aoh) -> float:
        return self._values.get((agent, aoh), 0.0)

    def observe(self, agent: int, aoh, g: float) -> None:
        key = (agent, aoh)
        old = self._values.get(key)
        self._values[key] = g if old is None else self.decay * old + (1.0 - self.decay) * g


# -- the gradient estimator -----------------------------------------------------

@dataclass(frozen=True)
class BatchStats:
    sp_estimate: float
    mean_entropy: float
    grad_norm: float
    objective_estimate: float


def _traj_entropies(env: DecPomdpSpec, policy, traj: Trajectory) -> np.ndarray:
    """Exact local policy entropies at the visited decision points, (agents, steps)."""
    n = env.num_agents
    rows = np.zeros((n, len(traj.steps)))
    for t in range(len(traj.steps)):
        for i in range(n):
            aoh = traj.aohs[t][i]
            acts = env.local_actions(i, aoh)
            if len(acts) > 1:
                rows[i, t] = policy_entropy(policy, i, aoh, acts)
    return rows


def _accumulate_traj_grad(env, policy, traj, weight, adv, ent_rows, alpha,
                          entropy_mode, out) -> None:
    steps = traj.steps
    horizon = len(steps)
    tail = None
    if entropy_mode == "objective" and alpha != 0.0 and horizon > 1:
        step_ent = ent_rows.sum(axis=0)
        tail = np.zeros(horizon)
        run = 0.0
        for t in range(horizon - 2, -1, -1):
            run += step_ent[t + 1]
            tail[t] = run
    for t, step in enumerate(steps):
        for i in range(env.num_agents):
            aoh = traj.aohs[t][i]
            acts = env.local_actions(i, aoh)
            if len(acts) < 2:
                continue
            a_idx = acts.index(step.joint_action[i])
            coeff = adv[i, t]
            if alpha != 0.0:
                coeff = coeff - alpha * policy.log_probs(i, aoh, acts)[a_idx]
                if tail is not None:
                    coeff = coeff + alpha * tail[t]
            policy.accumulate_logprob_grad(i, aoh, a_idx, weight * coeff, out)


def _subtract_batch_mean(adv_rows, weights, num_agents):
    max_len = max(a.shape[1] for a in adv_rows)
    num = np.zeros((num_agents, max_len))
    den = np.zeros(max_len)
    for w, a in zip(weights, adv_rows):
        horizon = a.shape[1]
        num[:, :horizon] += w * a
        den[:horizon] += w
    safe = np.where(den > 0.0, den, 1.0)
    mean = num / safe
    return [a - mean[:, : a.shape[1]] for a in adv_rows]


def grad_estimate(env: DecPomdpSpec, policy, config: TrainConfig, trajectories,
                  *, weights=None, ema=None, critic=None):
    """Gradient of the entropy-regularized objective from weighted trajectories.

    `weights` defaults to 1/N each (a Monte Carlo batch); passing exact
    trajectory probabilities gives the estimator's expectation instead. Does
    not mutate baseline or critic state. Returns (gradient, BatchStats).
    """
    if len(trajectories) == 0:
        raise ValueError("need at least one trajectory")
    if weights is None:
        weights = np.full(len(trajectories), 1.0 / len(trajectories))
    else:
        weights = np.asarray(weights, dtype=float)
    gamma = env.discount
    alpha = config.entropy_coefficient
    n = env.num_agents

    if config.advantage_mode == "lambda-critic":
        if critic is None:
            raise ValueError("advantage_mode 'lambda-critic' needs a critic")
        adv_rows = [critic_advantages(t, critic, gamma, config.advantage_lambda)
                    for t in trajectories]
    else:
        adv_rows = [np.tile(returns_to_go(t, gamma), (n, 1)) for t in trajectories]

    if config.baseline == "batch-mean":
        adv_rows = _subtract_batch_mean(adv_rows, weights, n)
    elif config.baseline == "per-aoh-ema":
        if ema is None:
            raise ValueError("baseline 'per-aoh-ema' needs a baseline state")
        for traj, a in zip(trajectories, adv_rows):
            for t in range(a.shape[1]):
                for i in range(n):
                    a[i, t] -= ema.value(i, traj.aohs[t][i])

    grad = np.zeros(policy.num_params)
    sp = 0.0
    ent_total = 0.0
    for traj, w, a in zip(trajectories, weights, adv_rows):
        ent_rows = _traj_entropies(env, policy, traj)
        sp += w * traj.total_return(gamma)
        ent_total += w * float(ent_rows.sum())
        _accumulate_traj_grad(env, policy, traj, w, a, ent_rows, alpha,
                              config.entropy_mode, grad)
    stats = BatchStats(
        sp_estimate=sp,
        mean_entropy=ent_total,
        grad_norm=float(np.linalg.norm(grad)),
        objective_estimate=sp + alpha * ent_total,
    )
    return grad, stats


def expected_grad_estimate(env: DecPomdpSpec, policy, config: TrainConfig,
                           *, ema=None, critic=None,
                           node_budget: int = DEFAULT_NODE_BUDGET):
    """Exact expectation of `grad_estimate` under the current policy: the same
    accumulator run over every positive-probability trajectory with its exact
    probability as weight."""
    register_reachable_aohs(env, policy, node_budget)
    pairs = enumerate_trajectories(env, policy, node_budget)
    trajs = [t for t, _ in pairs]
    probs = np.array([p for _, p in pairs])
    return grad_estimate(env, policy, config, trajs, weights=probs,
                         ema=ema, critic=critic)


def exact_gradient(env: DecPomdpSpec, policy, alpha: float,
                   entropy_mode: str = "objective",
                   node_budget: int = DEFAULT_NODE_BUDGET) -> np.ndarray:
    """Exact gradient of the entropy-regularized objective by enumeration.

    In the default "objective" mode and at discount 1 this is the gradient of
    `objective_value`, to floating-point accuracy. "bonus" mode instead gives
    the expectation of the bonus-form estimator, which ignores how actions
    steer the episode toward or away from high-entropy decision points.
    """
    config = TrainConfig(entropy_coefficient=alpha, baseline="none",
                         entropy_mode=entropy_mode)
    grad, _ = expected_grad_estimate(env, policy, config, node_budget=node_budget)
    return grad


def objective_value(env: DecPomdpSpec, policy, alpha: float,
                    node_budget: int = DEFAULT_NODE_BUDGET) -> float:
    """J + alpha * E[sum of local policy entropies along the episode]."""
    stats = exact_expectations(env, policy, node_budget)
    return stats.j_sp + alpha * stats.entropy_undiscounted


# -- the training loop -----------------------------------------------------------

class TrainingLog:
    """Per-iteration scalar trace; writes the CSV the CLI emits."""

    COLUMNS = ("iteration", "sp_estimate", "mean_entropy", "grad_norm")

    def __init__(self):
        self.rows: list[tuple[int, float, float, float]] = []

    def append(self, iteration: int, stats: BatchStats) -> None:
        self.rows.append((iteration, stats.sp_estimate, stats.mean_entropy,
                          stats.grad_norm))

    def last(self):
        return self.rows[-1] if self.rows else None

    def column(self, name: str) -> np.ndarray:
        idx = self.COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows])

    def to_csv(self, path, comment: str | None = None) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            writer.writerows(self.rows)
        return path


@dataclass
class TrainResult:
    policy: object
    log: TrainingLog
    config: TrainConfig
    critic: TabularCritic | None


def make_initial_policy(env: DecPomdpSpec, config: TrainConfig, seed_sequence=None):
    """Fresh policy for `config.parametrization`, perturbed by
    `init_noise_scale` Gaussian noise drawn from the training seed."""
    if seed_sequence is None:
        seed_sequence = np.random.SeedSequence(config.seed).spawn(2)[0]
    init_seed = int(seed_sequence.generate_state(1)[0])
    if config.parametrization == "shared-symmetric":
        rng = np.random.default_rng(init_seed)
        theta = config.init_noise_scale * rng.standard_normal(2)
        return SharedSymmetricPolicy(theta[0], theta[1])
    return TabularJointPolicy(env.num_agents, seed=init_seed,
                              init_noise_scale=config.init_noise_scale)


def _update_ema(ema: _EmaBaseline, batch, env: DecPomdpSpec) -> None:
    for traj in batch:
        rets = returns_to_go(traj, env.discount)
        for t in range(len(traj.steps)):
            for i in range(env.num_agents):
                ema.observe(i, traj.aohs[t][i], rets[t])


def _update_critic(critic: TabularCritic, batch, env: DecPomdpSpec,
                   config: TrainConfig) -> None:
    # targets from the pre-update critic, then applied sequentially
    updates = []
    for traj in batch:
        adv = critic_advantages(traj, critic, env.discount, config.advantage_lambda)
        for t in range(len(traj.steps)):
            for i in range(env.num_agents):
                aoh = traj.aohs[t][i]
                updates.append((i, aoh, adv[i, t] + critic.value(i, aoh)))
    for agent, aoh, target in updates:
        critic.update(agent, aoh, target)


def train(env: DecPomdpSpec, config: TrainConfig, *, policy=None,
          critic: TabularCritic | None = None) -> TrainResult:
    """Run the configured number of gradient-ascent iterations.

    A fresh policy is created unless one is passed in (for warm starts or a
    frozen pre-seeded critic experiment). Every reachable decision point is
    registered up front, so the initial noise draw is a deterministic
    function of the seed and the greedified policy is always complete.
    """
    config.validate()
    init_seq, sample_seq = np.random.SeedSequence(config.seed).spawn(2)
    if policy is None:
        policy = make_initial_policy(env, config, init_seq)
    register_reachable_aohs(env, policy)
    rng = np.random.default_rng(sample_seq)
    ema = _EmaBaseline(config.baseline_decay) if config.baseline == "per-aoh-ema" else None
    if config.advantage_mode == "lambda-critic" and critic is None:
        critic = TabularCritic(env.num_agents, learning_rate=config.critic_learning_rate)
    expected = config.gradient_estimator == "expected"
    log = TrainingLog()
    for k in range(1, config.iterations + 1):
        if expected:
            batch = None
            grad, stats = expected_grad_estimate(env, policy, config, critic=critic)
        else:
            batch = [rollout(env, policy, rng) for _ in range(config.batch_size)]
            grad, stats = grad_estimate(env, policy, config, batch, ema=ema, critic=critic)
        if not np.isfinite(grad).all():
            raise TrainingDivergedError(k, log)
        if stats.grad_norm > config.max_grad_norm:
            grad = grad * (config.max_grad_norm / stats.grad_norm)
        lr = config.learning_rate if config.step_schedule == "constant" else config.learning_rate / k
        policy.apply_flat_step(lr * grad)
        if batch is not None:
            if ema is not None:
                _update_ema(ema, batch, env)
            if critic is not None and not config.critic_frozen:
                _update_critic(critic, batch, env, config)
        log.append(k, stats)
    return TrainResult(policy=policy, log=log, config=config, critic=critic)


# -- seed sweeps --------------------------------------------------------------

def derive_cell_seed(master_seed: int, alpha_index: int, seed_index: int) -> int:
    """Stable per-cell seed: a hash of (master seed, alpha index, seed index),
    independent of sweep ordering or parallelism."""
    seq = np.random.SeedSequence((master_seed, alpha_index, seed_index))
    return int(seq.generate_state(1)[0])


def greedy_decision_summary(env: DecPomdpSpec, greedy_policy) -> str:
    """One-line description of a greedified policy: every reachable decision
    point with its maximal-probability actions, ties joined by '+'."""
    parts = []
    for agent, aoh, acts in reachable_aohs(env):
        probs = greedy_policy.action_probs(agent, aoh, acts)
        winners = [a for a, p in zip(acts, probs) if p == probs.max()]
        parts.append(f"agent{agent}@{aoh_key(aoh)}={'+'.join(winners)}")
    return ";".join(parts)


@dataclass(frozen=True)
class SweepCell:
    alpha: float
    alpha_index: int
    seed_index: int
    seed: int
    sp_greedy: float
    sp_train: float
    greedy_summary: str


@dataclass
class SweepResult:
    master_seed: int
    alphas: tuple[float, ...]
    seeds_per_alpha: int
    cells: list[list[SweepCell]]
    policies: list[list[object]]
    policy_payloads: list[list[dict]] = field(default_factory=list)
    train_config: dict = field(default_factory=dict)

    COLUMNS = ("alpha", "alpha_index", "seed_index", "seed", "sp_greedy",
               "sp_train", "greedy_summary")

    def to_csv(self, path, comment: str | None = None) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for row in self.cells:
                for c in row:
                    writer.writerow([c.alpha, c.alpha_index, c.seed_index, c.seed,
                                     repr(c.sp_greedy), repr(c.sp_train),
                                     c.greedy_summary])
        return path


def run_sweep_cell(payload: dict) -> dict:
    """Train one (alpha, seed) cell from a JSON-serializable payload.

    Module-level so process pools can import it; everything needed to rebuild
    the environment and the configuration travels in the payload, and the
    returned dict (policy included) is JSON-serializable with bit-exact
    logits.
    """
    env = build_env(payload["env_config"])
    base = dict(payload.get("train_config", {}))
    alpha = float(payload["alpha"])
    alpha_index = int(payload["alpha_index"])
    seed_index = int(payload["seed_index"])
    seed = derive_cell_seed(int(payload["master_seed"]), alpha_index, seed_index)
    base["entropy_coefficient"] = alpha
    base["seed"] = seed
    config = TrainConfig.from_dict(base)
    result = train(env, config)
    tie_epsilon = float(payload.get("tie_epsilon", DEFAULT_TIE_EPSILON))
    greedy = result.policy.greedified(tie_epsilon)
    sp_greedy = exact_expectations(env, greedy).j_sp
    last = result.log.last()
    provenance = {
        "env_config": env.config,
        "env_digest": env_digest(env),
        "alpha": alpha,
        "alpha_index": alpha_index,
        "seed_index": seed_index,
        "seed": seed,
        "master_seed": int(payload["master_seed"]),
        "train_config": config.to_dict(),
        "train_config_digest": config.digest(),
        "tool_version": VERSION,
    }
    return {
        "alpha": alpha,
        "alpha_index": alpha_index,
        "seed_index": seed_index,
        "seed": seed,
        "sp_greedy": sp_greedy,
        "sp_train": last[1] if last else float("nan"),
        "greedy_summary": greedy_decision_summary(env, greedy),
        "policy": policy_payload(result.policy, provenance),
    }


def sweep_payloads(env_config: dict, alphas, seeds_per_alpha: int,
                   train_config: dict, master_seed: int,
                   tie_epsilon: float = DEFAULT_TIE_EPSILON) -> list[dict]:
    return [
        {
            "env_config": env_config,
            "train_config": dict(train_config),
            "alpha": float(alpha),
            "alpha_index": ai,
            "seed_index": si,
            "master_seed": int(master_seed),
            "tie_epsilon": tie_epsilon,
        }
        for ai, alpha in enumerate(alphas)
        for si in range(seeds_per_alpha)
    ]


def sweep_alpha(env_config: dict, alphas, seeds_per_alpha: int,
                train_config: dict | None = None, master_seed: int = 0,
                *, tie_epsilon: float = DEFAULT_TIE_EPSILON,
                mapper=map) -> SweepResult:
    """Train `seeds_per_alpha` independent seeds at every entropy coefficient.

    `mapper` is any map-like callable over `run_sweep_cell` payloads; pass a
    process pool's map for parallel cells. Results are assembled in
    (alpha_index, seed_index) order regardless of completion order, so the
    output is independent of the worker count.
    """
    alphas = tuple(float(a) for a in alphas)
    train_config = dict(train_config or {})
    TrainConfig.from_dict({**train_config, "entropy_coefficient": 0.0})
    payloads = sweep_payloads(env_config, alphas, seeds_per_alpha, train_config,
                              master_seed, tie_epsilon)
    outcomes = sorted(mapper(run_sweep_cell, payloads),
                      key=lambda o: (o["alpha_index"], o["seed_index"]))
    cells: list[list[SweepCell]] = [[] for _ in alphas]
    policies: list[list[object]] = [[] for _ in alphas]
    payload_rows: list[list[dict]] = [[] for _ in alphas]
    for o in outcomes:
        cells[o["alpha_index"]].append(SweepCell(
            alpha=o["alpha"], alpha_index=o["alpha_index"],
            seed_index=o["seed_index"], seed=o["seed"],
            sp_greedy=o["sp_greedy"], sp_train=o["sp_train"],
            greedy_summary=o["greedy_summary"]))
        policies[o["alpha_index"]].append(policy_from_payload(o["policy"]))
        payload_rows[o["alpha_index"]].append(o["policy"])
    return SweepResult(master_seed=int(master_seed), alphas=alphas,
                       seeds_per_alpha=seeds_per_alpha, cells=cells,
                       policies=policies, policy_payloads=payload_rows,
                       train_config=train_config)
