"""Self-play and cross-play scoring for independently trained joint policies.

Conventions:

* Policies are evaluated greedified (the deterministic-up-to-ties policy
  obtained by putting mass 1/K on each of the K maximal-probability actions);
  pass ``greedy_first=False`` to score the stochastic policies as they are.
* A cross-play pairing is built by seating whole agents from different
  training runs together: seat i of the composite uses source i's tables for
  agent i.
* `xp_matrix` entries are seat-ordered: entry (j, k) scores policy j in seat
  0 against policy k in seat 1, so the matrix need not be symmetric.
  `xp_score` averages over all n! seatings of n policies.
* `cross_seed_teams` scores every ordered assignment of distinct training
  runs to seats. Alongside the mean it reports the across-team sample
  standard deviation (the dispersion that reveals incompatible conventions;
  with exact per-team values there is no measurement noise, so the spread is
  entirely seed disagreement) and that std divided by sqrt(count).

Exact scores enumerate the game tree; Monte Carlo scores use per-cell
substreams derived from (seed, cell index), so results do not depend on
evaluation order.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DEFAULT_NODE_BUDGET, DecPomdpSpec, exact_expectations, rollout
from .policy import DEFAULT_TIE_EPSILON


@dataclass(frozen=True)
class EvalMode:
    """How to score a joint policy: exact enumeration or sampled episodes."""

    kind: str
    games: int = 10_000
    seed: int = 0
    node_budget: int = DEFAULT_NODE_BUDGET

    def __post_init__(self):
        if self.kind not in ("exact", "monte-carlo"):
            raise ValueError(f"unknown evaluation kind {self.kind!r}")
        if self.kind == "monte-carlo" and self.games < 1:
            raise ValueError("monte-carlo evaluation needs at least one game")
        if self.seed < 0:
            raise ValueError("evaluation seed must be nonnegative")


EXACT = EvalMode("exact")


def monte_carlo(games: int = 10_000, seed: int = 0) -> EvalMode:
    return EvalMode("monte-carlo", games=games, seed=seed)


@dataclass(frozen=True)
class ScoreResult:
    value: float
    stderr: float
    games: int


class CompositeJointPolicy:
    """Seats agent tables from different training runs in one joint policy."""

    def __init__(self, sources):
        self.sources = tuple(sources)
        self.num_agents = len(self.sources)

    def action_probs(self, agent: int, aoh, actions=None):
        return self.sources[agent].action_probs(agent, aoh, actions)

    def ensure_aoh(self, agent: int, aoh, actions) -> None:
        self.sources[agent].ensure_aoh(agent, aoh, actions)

    def greedified(self, tie_epsilon: float = 0.0) -> "CompositeJointPolicy":
        return CompositeJointPolicy([s.greedified(tie_epsilon) for s in self.sources])


def _mc_score(env: DecPomdpSpec, policy, games: int, seed_key) -> ScoreResult:
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))
    returns = np.empty(games)
    for g in range(games):
        returns[g] = rollout(env, policy, rng).total_return(env.discount)
    std = float(returns.std(ddof=1)) if games > 1 else 0.0
    return ScoreResult(float(returns.mean()), std / np.sqrt(games), games)


def _score(env: DecPomdpSpec, policy, mode: EvalMode, seed_key) -> ScoreResult:
    if mode.kind == "exact":
        stats = exact_expectations(env, policy, mode.node_budget)
        return ScoreResult(stats.j_sp, 0.0, 0)
    return _mc_score(env, policy, mode.games, seed_key)


def sp_score(env: DecPomdpSpec, policy, mode: EvalMode = EXACT) -> ScoreResult:
    """Expected return of one joint policy playing with itself."""
    return _score(env, policy, mode, (mode.seed,))


def xp_score(env: DecPomdpSpec, policies, mode: EvalMode = EXACT) -> ScoreResult:
    """Seating-averaged score of n policies on an n-agent game.

    Every permutation assigns the policies to seats once; the result averages
    the permutation scores. Monte Carlo runs give each permutation its own
    substream of `mode.games` episodes.
    """
    policies = list(policies)
    if len(policies) != env.num_agents:
        raise ValueError(
            f"need one policy per agent ({env.num_agents}), got {len(policies)}"
        )
    perms = list(itertools.permutations(range(len(policies))))
    values = np.empty(len(perms))
    variances = np.zeros(len(perms))
    games = 0
    for pi, perm in enumerate(perms):
        composite = CompositeJointPolicy([policies[j] for j in perm])
        score = _score(env, composite, mode, (mode.seed, pi))
        values[pi] = score.value
        variances[pi] = score.stderr ** 2
        games += score.games
    stderr = float(np.sqrt(variances.sum()) / len(perms))
    return ScoreResult(float(values.mean()), stderr, games)


@dataclass
class XpMatrix:
    """Seat-ordered pairwise scores; entry (j, k) seats policy j first."""

    values: np.ndarray
    stderr: np.ndarray | None
    labels: tuple[str, ...]
    mode_kind: str

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path, comment: str | None = None) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh)
            writer.writerow(["seat0\\seat1", *self.labels])
            for j, label in enumerate(self.labels):
                writer.writerow([label, *[repr(float(v)) for v in self.values[j]]])
        return path


def xp_matrix(env: DecPomdpSpec, policies, mode: EvalMode = EXACT,
              labels=None, *, greedy_first: bool = True,
              tie_epsilon: float = DEFAULT_TIE_EPSILON) -> XpMatrix:
    """All seat-ordered pairings of the given policies on a two-agent game."""
    if env.num_agents != 2:
        raise ValueError("pairwise cross-play matrices are defined for 2-agent games")
    policies = list(policies)
    if greedy_first:
        policies = [p.greedified(tie_epsilon) for p in policies]
    s = len(policies)
    if labels is None:
        labels = tuple(f"policy{j}" for j in range(s))
    values = np.empty((s, s))
    stderr = None if mode.kind == "exact" else np.empty((s, s))
    for j in range(s):
        for k in range(s):
            score = _score(env, CompositeJointPolicy([policies[j], policies[k]]),
                           mode, (mode.seed, j, k))
            values[j, k] = score.value
            if stderr is not None:
                stderr[j, k] = score.stderr
    return XpMatrix(values, stderr, tuple(labels), mode.kind)


@dataclass
class BlockAverages:
    """Group-level view of a cross-play matrix with equal-size groups.

    `sp[g]` averages the diagonal cells of diagonal block g (each policy with
    itself). `xp[g, h]` averages the whole (g, h) block, except that diagonal
    blocks exclude their diagonal cells so `xp[g, g]` is purely cross-seed
    play within group g; it is NaN when groups hold a single policy.
    """

    group_size: int
    labels: tuple[str, ...]
    sp: np.ndarray
    xp: np.ndarray


def block_average(values: np.ndarray, group_size: int,
                  labels=None) -> BlockAverages:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("cross-play matrix must be square")
    size = values.shape[0]
    if group_size < 1 or size % group_size != 0:
        raise ValueError(
            f"matrix of size {size} does not divide into groups of {group_size}"
        )
    groups = size // group_size
    if labels is None:
        labels = tuple(f"group{g}" for g in range(groups))
    elif len(labels) != groups:
        raise ValueError(f"need {groups} group labels, got {len(labels)}")
    sp = np.empty(groups)
    xp = np.empty((groups, groups))
    for g in range(groups):
        for h in range(groups):
            block = values[g * group_size:(g + 1) * group_size,
                           h * group_size:(h + 1) * group_size]
            if g == h:
                diag = np.diagonal(block)
                sp[g] = diag.mean()
                off = block[~np.eye(group_size, dtype=bool)]
                xp[g, h] = off.mean() if off.size else np.nan
            else:
                xp[g, h] = block.mean()
    return BlockAverages(group_size, tuple(labels), sp, xp)


def team_assignments(num_policies: int, num_agents: int):
    """Every ordered seating of distinct policies: count s!/(s-n)!."""
    return list(itertools.permutations(range(num_policies), num_agents))


@dataclass
class TeamStats:
    """Scores across all ordered cross-seed seatings.

    `std` is the across-team sample standard deviation (ddof 1), the headline
    dispersion; `stderr` divides it by sqrt(count).
    """

    mean: float
    std: float
    stderr: float
    count: int
    scores: np.ndarray


def cross_seed_teams(env: DecPomdpSpec, policies, mode: EvalMode = EXACT,
                     *, greedy_first: bool = True,
                     tie_epsilon: float = DEFAULT_TIE_EPSILON) -> TeamStats:
    """Score every ordered assignment of distinct training runs to the seats."""
    policies = list(policies)
    if len(policies) < env.num_agents:
        raise ValueError(
            f"need at least {env.num_agents} policies for a cross-seed team, "
            f"got {len(policies)}"
        )
    if greedy_first:
        policies = [p.greedified(tie_epsilon) for p in policies]
    teams = team_assignments(len(policies), env.num_agents)
    scores = np.empty(len(teams))
    for ti, team in enumerate(teams):
        composite = CompositeJointPolicy([policies[j] for j in team])
        scores[ti] = _score(env, composite, mode, (mode.seed, ti)).value
    std = float(scores.std(ddof=1)) if len(teams) > 1 else 0.0
    return TeamStats(
        mean=float(scores.mean()),
        std=std,
        stderr=float(std / np.sqrt(len(teams))),
        count=len(teams),
        scores=scores,
    )


# -- grouped reports ------------------------------------------------------------

@dataclass
class PolicyGroup:
    """Policies that share a training recipe (one group per entropy level)."""

    label: str
    alpha: float | None
    policies: list


@dataclass
class XpReport:
    env_name: str
    mode_kind: str
    group_labels: tuple[str, ...]
    group_sizes: tuple[int, ...]
    alphas: tuple
    sp_values: list[np.ndarray]
    sp_means: np.ndarray
    xp_between: np.ndarray
    teams: list[TeamStats | None]
    matrix: XpMatrix | None
    notes: list[str]


def build_report(env: DecPomdpSpec, groups, mode: EvalMode = EXACT,
                 *, tie_epsilon: float = DEFAULT_TIE_EPSILON) -> XpReport:
    """Self-play, pairwise cross-play, and team statistics for policy groups.

    Greedifies every policy once up front. The pairwise matrix covers all
    policies of all groups (two-agent games only); `xp_between[g, h]`
    averages the corresponding block, excluding self-pairings within a
    group's own block. Cross-seed team statistics are computed per group
    when the group has enough policies.
    """
    groups = list(groups)
    if not groups:
        raise ValueError("need at least one policy group")
    notes: list[str] = []
    greedy_groups = [
        PolicyGroup(g.label, g.alpha, [p.greedified(tie_epsilon) for p in g.policies])
        for g in groups
    ]
    sp_values = []
    for g in greedy_groups:
        vals = np.array([sp_score(env, p, mode).value for p in g.policies])
        sp_values.append(vals)
    sp_means = np.array([v.mean() for v in sp_values])

    all_policies = [p for g in greedy_groups for p in g.policies]
    labels = [f"{g.label}/s{i}" for g in greedy_groups for i in range(len(g.policies))]
    matrix = None
    num_groups = len(greedy_groups)
    xp_between = np.full((num_groups, num_groups), np.nan)
    if env.num_agents == 2:
        matrix = xp_matrix(env, all_policies, mode, labels, greedy_first=False)
        starts = np.cumsum([0] + [len(g.policies) for g in greedy_groups])
        for gi in range(num_groups):
            for hi in range(num_groups):
                block = matrix.values[starts[gi]:starts[gi + 1],
                                      starts[hi]:starts[hi + 1]]
                if gi == hi:
                    n = block.shape[0]
                    off = block[~np.eye(n, dtype=bool)]
                    xp_between[gi, hi] = off.mean() if off.size else np.nan
                else:
                    xp_between[gi, hi] = block.mean()
    else:
        notes.append(
            f"pairwise matrix skipped: {env.name} has {env.num_agents} agents"
        )

    teams: list[TeamStats | None] = []
    for g in greedy_groups:
        if len(g.policies) >= max(env.num_agents, 2):
            teams.append(cross_seed_teams(env, g.policies, mode, greedy_first=False))
        else:
            teams.append(None)
            notes.append(
                f"group '{g.label}' has {len(g.policies)} policy/policies; "
                "cross-seed teams need at least "
                f"{max(env.num_agents, 2)}, reporting self-play only"
            )
    return XpReport(
        env_name=env.name,
        mode_kind=mode.kind,
        group_labels=tuple(g.label for g in greedy_groups),
        group_sizes=tuple(len(g.policies) for g in greedy_groups),
        alphas=tuple(g.alpha for g in greedy_groups),
        sp_values=sp_values,
        sp_means=sp_means,
        xp_between=xp_between,
        teams=teams,
        matrix=matrix,
        notes=notes,
    )
