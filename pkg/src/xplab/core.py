"""Finite-horizon decentralized-POMDP primitives.

An environment is a finite cooperative game: a finite state set with a
designated terminal subset, an initial state distribution, per-agent local
action sets, a joint transition kernel, a shared reward, and a deterministic
per-agent observation of the state. Episodes run for at most `horizon` steps
and stop early when a terminal state is reached; every state reachable at the
horizon must itself be terminal.

Each agent conditions only on its local action-observation history (AOH),
represented as a flat tuple of labels

    (o_0, a_0, o_1, a_1, ..., o_t)

starting with the observation of the initial state. Including o_0 lets the
initial state distribution carry chance events that some agents observe
before acting (the signalling game draws the pet this way) while keeping the
stated horizon. Policies are any objects exposing
``action_probs(agent, aoh, actions=None) -> ndarray`` over the local actions
in the order the environment lists them.

Agents with a single legal action at an AOH are not consulted: the rollout
and the enumerator take the forced action without querying the policy, so
policy tables only ever contain decision points with two or more actions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

Aoh = tuple[str, ...]

DEFAULT_NODE_BUDGET = 1_000_000


class EnumerationBudgetError(RuntimeError):
    """The trajectory tree exceeded the node budget."""


def aoh_key(aoh: Aoh) -> str:
    """Canonical string form of an AOH, used for serialization and messages."""
    return "|".join(aoh)


@dataclass(frozen=True, eq=False)
class DecPomdpSpec:
    """Immutable environment definition.

    `transition(state, joint_action)` returns a probability row over state
    indices, `reward(state, joint_action)` the shared reward earned on that
    step, `observe(agent, state)` the deterministic observation label, and
    `local_actions(agent, aoh)` the ordered tuple of legal local actions.
    `config`, when present, is a JSON-serializable constructor description
    used for provenance stamping.
    """

    name: str
    num_agents: int
    state_labels: tuple[str, ...]
    terminal: frozenset[int]
    initial_distribution: np.ndarray
    local_actions: Callable[[int, Aoh], tuple[str, ...]]
    transition: Callable[[int, tuple[str, ...]], np.ndarray]
    reward: Callable[[int, tuple[str, ...]], float]
    observe: Callable[[int, int], str]
    horizon: int
    discount: float = 1.0
    config: dict | None = None

    @property
    def num_states(self) -> int:
        return len(self.state_labels)

    def is_terminal(self, state: int) -> bool:
        return state in self.terminal

    def label(self, state: int) -> str:
        return self.state_labels[state]


@dataclass(frozen=True)
class Step:
    state: int
    joint_action: tuple[str, ...]
    reward: float


@dataclass(frozen=True)
class Trajectory:
    """A realized state-action history plus the per-agent AOHs derived from it.

    `aohs[t][agent]` is the agent's AOH after t steps (t ranges over
    0..len(steps) inclusive, the last entry being the AOH at the final state).
    """

    steps: tuple[Step, ...]
    final_state: int
    aohs: tuple[tuple[Aoh, ...], ...]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def states(self) -> tuple[int, ...]:
        return tuple(s.state for s in self.steps) + (self.final_state,)

    @property
    def rewards(self) -> tuple[float, ...]:
        return tuple(s.reward for s in self.steps)

    def local_aohs(self, agent: int, t: int) -> Aoh:
        return self.aohs[t][agent]

    def total_return(self, discount: float = 1.0) -> float:
        g = 0.0
        d = 1.0
        for step in self.steps:
            g += d * step.reward
            d *= discount
        return g

    def key(self):
        """Hashable identity of the state-action path (for frequency counting)."""
        return tuple((s.state, s.joint_action) for s in self.steps) + (self.final_state,)


def _sample_probs(probs, rng) -> int:
    # probs vectors here are tiny; a running-sum loop beats vectorized choice
    r = rng.random()
    acc = 0.0
    last = len(probs) - 1
    for i in range(last):
        acc += probs[i]
        if r < acc:
            return i
    return last


def rollout(env: DecPomdpSpec, policy, rng_seed, mode: str = "sampled") -> Trajectory:
    """Sample one episode under `policy`.

    `rng_seed` is an integer seed or a numpy Generator. In "sampled" mode
    actions are drawn from the policy distribution; in "greedy" mode each
    agent draws uniformly among its own maximum-probability actions (the
    per-agent factorization of the greedified joint policy).

    Raises whatever the policy raises for an unknown AOH (a frozen table
    raises an error naming the agent and the AOH).
    """
    if mode not in ("sampled", "greedy"):
        raise ValueError(f"unknown rollout mode {mode!r}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    state = _sample_probs(env.initial_distribution, rng)
    current: list[Aoh] = [(env.observe(i, state),) for i in range(env.num_agents)]
    aoh_hist: list[tuple[Aoh, ...]] = [tuple(current)]
    steps: list[Step] = []
    for _ in range(env.horizon):
        if env.is_terminal(state):
            break
        labels = []
        for i in range(env.num_agents):
            acts = env.local_actions(i, current[i])
            if len(acts) == 1:
                labels.append(acts[0])
                continue
            probs = policy.action_probs(i, current[i], acts)
            if mode == "greedy":
                winners = np.flatnonzero(probs == probs.max())
                idx = int(winners[0]) if len(winners) == 1 else int(winners[rng.integers(len(winners))])
            else:
                idx = _sample_probs(probs, rng)
            labels.append(acts[idx])
        joint = tuple(labels)
        reward = float(env.reward(state, joint))
        row = env.transition(state, joint)
        next_state = _sample_probs(row, rng)
        steps.append(Step(state, joint, reward))
        state = next_state
        current = [aoh + (joint[i], env.observe(i, state)) for i, aoh in enumerate(current)]
        aoh_hist.append(tuple(current))
    return Trajectory(tuple(steps), state, tuple(aoh_hist))


def enumerate_trajectories(
    env: DecPomdpSpec, policy, node_budget: int = DEFAULT_NODE_BUDGET
) -> list[tuple[Trajectory, float]]:
    """Exhaustively expand every positive-probability trajectory.

    Returns (trajectory, probability) pairs; the probabilities sum to 1 up to
    floating-point rounding. Branches whose policy or transition probability
    is exactly zero are pruned, so greedified policies (with their 1/K tie
    mixtures) enumerate exactly. Raises EnumerationBudgetError when the tree
    exceeds `node_budget` expanded nodes.
    """
    n = env.num_agents
    out: list[tuple[Trajectory, float]] = []
    visited = 0

    def walk(state, aohs, t, prob, steps, hist):
        nonlocal visited
        visited += 1
        if visited > node_budget:
            raise EnumerationBudgetError(
                f"trajectory tree exceeded the {node_budget}-node budget; "
                "use Monte Carlo evaluation (mode 'monte-carlo') for this environment"
            )
        if env.is_terminal(state) or t == env.horizon:
            out.append((Trajectory(tuple(steps), state, tuple(hist)), prob))
            return
        acts = [env.local_actions(i, aohs[i]) for i in range(n)]
        dists = [
            policy.action_probs(i, aohs[i], a) if len(a) > 1 else _FORCED
            for i, a in enumerate(acts)
        ]
        for idxs in itertools.product(*(range(len(a)) for a in acts)):
            p_joint = prob
            for i, ai in enumerate(idxs):
                p_joint *= dists[i][ai]
            if p_joint <= 0.0:
                continue
            joint = tuple(acts[i][ai] for i, ai in enumerate(idxs))
            reward = float(env.reward(state, joint))
            row = env.transition(state, joint)
            step = Step(state, joint, reward)
            for s2 in np.flatnonzero(row > 0.0):
                s2 = int(s2)
                nxt = [aohs[i] + (joint[i], env.observe(i, s2)) for i in range(n)]
                walk(s2, nxt, t + 1, p_joint * float(row[s2]), steps + [step], hist + [tuple(nxt)])

    for s0 in np.flatnonzero(env.initial_distribution > 0.0):
        s0 = int(s0)
        aohs0 = [(env.observe(i, s0),) for i in range(n)]
        walk(s0, aohs0, 0, float(env.initial_distribution[s0]), [], [tuple(aohs0)])
    return out


_FORCED = np.ones(1)


def _entropy(probs) -> float:
    logs = np.log(probs, out=np.zeros_like(probs), where=probs > 0.0)
    return float(-(probs * logs).sum())


@dataclass(frozen=True)
class ExactStats:
    """Exact expectations under a policy: return plus two entropy bookkeepings.

    `entropy_discounted` weights the per-step policy entropy by discount**t,
    `entropy_undiscounted` sums it plainly; they coincide at discount 1.
    Per-step entropy is the sum over agents of the local policy entropy at
    the visited AOH, which equals the joint policy entropy for a product
    policy.
    """

    j_sp: float
    entropy_discounted: float
    entropy_undiscounted: float
    num_trajectories: int


def exact_expectations(env: DecPomdpSpec, policy, node_budget: int = DEFAULT_NODE_BUDGET) -> ExactStats:
    trajs = enumerate_trajectories(env, policy, node_budget)
    ent_cache: dict[tuple[int, Aoh], float] = {}
    j = ent_d = ent_u = 0.0
    for traj, p in trajs:
        g = hd = hu = 0.0
        d = 1.0
        for t, step in enumerate(traj.steps):
            g += d * step.reward
            h = 0.0
            for i in range(env.num_agents):
                aoh = traj.aohs[t][i]
                cached = ent_cache.get((i, aoh))
                if cached is None:
                    acts = env.local_actions(i, aoh)
                    cached = 0.0 if len(acts) == 1 else _entropy(policy.action_probs(i, aoh, acts))
                    ent_cache[(i, aoh)] = cached
                h += cached
            hd += d * h
            hu += h
            d *= env.discount
        j += p * g
        ent_d += p * hd
        ent_u += p * hu
    return ExactStats(j, ent_d, ent_u, len(trajs))


def reachable_aohs(env: DecPomdpSpec, node_budget: int = DEFAULT_NODE_BUDGET):
    """All (agent, aoh, actions) decision points reachable under any action
    sequence, in a deterministic depth-first order. Only AOHs with two or
    more legal actions are yielded (forced moves carry no decision)."""
    n = env.num_agents
    seen: set[tuple[int, Aoh]] = set()
    out: list[tuple[int, Aoh, tuple[str, ...]]] = []
    visited = 0

    def walk(state, aohs, t):
        nonlocal visited
        visited += 1
        if visited > node_budget:
            raise EnumerationBudgetError(
                f"reachability walk exceeded the {node_budget}-node budget"
            )
        if env.is_terminal(state) or t == env.horizon:
            return
        acts = [env.local_actions(i, aohs[i]) for i in range(n)]
        for i in range(n):
            if len(acts[i]) > 1 and (i, aohs[i]) not in seen:
                seen.add((i, aohs[i]))
                out.append((i, aohs[i], acts[i]))
        for idxs in itertools.product(*(range(len(a)) for a in acts)):
            joint = tuple(acts[i][ai] for i, ai in enumerate(idxs))
            row = env.transition(state, joint)
            for s2 in np.flatnonzero(row > 0.0):
                s2 = int(s2)
                nxt = [aohs[i] + (joint[i], env.observe(i, s2)) for i in range(n)]
                walk(s2, nxt, t + 1)

    for s0 in np.flatnonzero(env.initial_distribution > 0.0):
        s0 = int(s0)
        walk(s0, [(env.observe(i, s0),) for i in range(n)], 0)
    return out


def register_reachable_aohs(env: DecPomdpSpec, policy, node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    """Pre-register every reachable decision point on the policy, so the flat
    parameter vector is complete and stable before gradient work."""
    points = reachable_aohs(env, node_budget)
    for agent, aoh, acts in points:
        policy.ensure_aoh(agent, aoh, acts)
    return len(points)


def validate_spec(env: DecPomdpSpec, node_budget: int = DEFAULT_NODE_BUDGET) -> None:
    """Walk the full game tree checking the structural invariants.

    Checks: the initial distribution is a distribution (sum 1 within 1e-12),
    every encountered transition row is one (nonnegative, sum 1 within
    1e-12), every state reachable at the horizon is terminal, and action and
    observation labels are nonempty strings free of the '|' separator.
    """
    init = np.asarray(env.initial_distribution, dtype=float)
    if init.shape != (env.num_states,):
        raise ValueError(f"{env.name}: initial distribution must have one entry per state")
    if np.any(init < 0.0) or abs(float(init.sum()) - 1.0) > 1e-12:
        raise ValueError(f"{env.name}: initial distribution must be nonnegative and sum to 1")
    if env.horizon < 1:
        raise ValueError(f"{env.name}: horizon must be at least 1")

    def check_label(label, kind):
        if not isinstance(label, str) or not label or "|" in label:
            raise ValueError(f"{env.name}: bad {kind} label {label!r}")

    for s in range(env.num_states):
        for i in range(env.num_agents):
            check_label(env.observe(i, s), "observation")

    n = env.num_agents
    visited = 0

    def walk(state, aohs, t):
        nonlocal visited
        visited += 1
        if visited > node_budget:
            raise EnumerationBudgetError(
                f"validation walk exceeded the {node_budget}-node budget"
            )
        if env.is_terminal(state):
            return
        if t == env.horizon:
            raise ValueError(
                f"{env.name}: state {env.label(state)!r} reachable at the horizon is not terminal"
            )
        acts = [env.local_actions(i, aohs[i]) for i in range(n)]
        for i, a in enumerate(acts):
            if len(a) == 0:
                raise ValueError(f"{env.name}: agent {i} has no legal action")
            for lbl in a:
                check_label(lbl, "action")
        for idxs in itertools.product(*(range(len(a)) for a in acts)):
            joint = tuple(acts[i][ai] for i, ai in enumerate(idxs))
            row = np.asarray(env.transition(state, joint), dtype=float)
            if row.shape != (env.num_states,):
                raise ValueError(f"{env.name}: transition row has wrong length")
            if np.any(row < 0.0) or abs(float(row.sum()) - 1.0) > 1e-12:
                raise ValueError(
                    f"{env.name}: transition row for state {env.label(state)!r}, "
                    f"action {joint} must be nonnegative and sum to 1"
                )
            float(env.reward(state, joint))
            for s2 in np.flatnonzero(row > 0.0):
                s2 = int(s2)
                nxt = [aohs[i] + (joint[i], env.observe(i, s2)) for i in range(n)]
                walk(s2, nxt, t + 1)

    for s0 in np.flatnonzero(init > 0.0):
        s0 = int(s0)
        walk(s0, [(env.observe(i, s0),) for i in range(n)], 0)
