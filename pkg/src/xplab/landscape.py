"""Entropy-regularized objective values and low-dimensional surfaces.

`j_alpha` scores one policy: expected return plus `alpha` times the expected
discounted sum of local policy entropies along the episode.

`shared_policy_surface` evaluates `j_alpha` for the two-parameter shared
policy (both agents play softmax(theta1, -theta1, theta2) everywhere) over a
(theta1, theta2) grid. Because every decision point shares one distribution,
each trajectory's probability is a monomial in the three action
probabilities; the surface enumerates the game tree once into trajectory
skeletons (chance probability, per-action choice counts, discounted return,
discounted count of decision points) and then evaluates the whole grid with
vectorized monomials. The theta1 -> -theta1 symmetry of games whose first
two actions are interchangeable shows up as a mirror symmetry of the
surface.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DEFAULT_NODE_BUDGET, DecPomdpSpec, EnumerationBudgetError, aoh_key, exact_expectations


def j_alpha(env: DecPomdpSpec, policy, alpha: float,
            node_budget: int = DEFAULT_NODE_BUDGET) -> float:
    """Expected return plus alpha times the expected discounted entropy sum."""
    stats = exact_expectations(env, policy, node_budget)
    return stats.j_sp + alpha * stats.entropy_discounted


def default_grid(lo: float = -4.0, hi: float = 4.0, num: int = 201) -> np.ndarray:
    return np.linspace(lo, hi, num)


@dataclass(frozen=True)
class _Skeletons:
    chance: np.ndarray   # (K,) product of chance probabilities
    counts: np.ndarray   # (K, 3) how many decisions picked each action
    returns: np.ndarray  # (K,) discounted return
    ent_weight: np.ndarray  # (K,) sum over decision points of discount**t


def _skeletons(env: DecPomdpSpec, node_budget: int) -> _Skeletons:
    chance: list[float] = []
    counts: list[list[int]] = []
    returns: list[float] = []
    ent_weight: list[float] = []
    visited = 0

    def walk(state, aohs, t, prob, disc, ret, cnt, entw):
        nonlocal visited
        visited += 1
        if visited > node_budget:
            raise EnumerationBudgetError(
                f"skeleton walk exceeded the {node_budget}-node budget"
            )
        if env.is_terminal(state) or t == env.horizon:
            chance.append(prob)
            counts.append(list(cnt))
            returns.append(ret)
            ent_weight.append(entw)
            return
        acts = [env.local_actions(i, aohs[i]) for i in range(env.num_agents)]
        deciders = []
        for i, a in enumerate(acts):
            if len(a) == 1:
                continue
            if len(a) != 3:
                raise ValueError(
                    "the shared-policy surface needs exactly 3 local actions at "
                    f"every decision point; agent {i} has {len(a)} at "
                    f"'{aoh_key(aohs[i])}'"
                )
            deciders.append(i)
        step_entw = entw + disc * len(deciders)
        for idxs in itertools.product(*(range(len(a)) for a in acts)):
            joint = tuple(acts[i][ai] for i, ai in enumerate(idxs))
            new_cnt = list(cnt)
            for i in deciders:
                new_cnt[idxs[i]] += 1
            reward = float(env.reward(state, joint))
            row = env.transition(state, joint)
            for s2 in np.flatnonzero(row > 0.0):
                s2 = int(s2)
                nxt = [aohs[i] + (joint[i], env.observe(i, s2)) for i in range(env.num_agents)]
                walk(s2, nxt, t + 1, prob * float(row[s2]), disc * env.discount,
                     ret + disc * reward, new_cnt, step_entw)

    init = env.initial_distribution
    for s0 in np.flatnonzero(init > 0.0):
        s0 = int(s0)
        aohs0 = [(env.observe(i, s0),) for i in range(env.num_agents)]
        walk(s0, aohs0, 0, float(init[s0]), 1.0, 0.0, [0, 0, 0], 0.0)
    return _Skeletons(np.array(chance), np.array(counts, dtype=float),
                      np.array(returns), np.array(ent_weight))


@dataclass
class SurfaceGrid:
    """`values[i, j]` is the objective at (theta1[i], theta2[j])."""

    theta1: np.ndarray
    theta2: np.ndarray
    values: np.ndarray
    alpha: float

    def argmax(self) -> tuple[float, float, float]:
        """(theta1, theta2, value) of the best grid point (first by row-major
        order on exact ties)."""
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.theta1[i]), float(self.theta2[j]), float(self.values[i, j])

    def to_csv(self, path, comment: str | None = None) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh)
            writer.writerow(["theta1\\theta2", *[repr(float(v)) for v in self.theta2]])
            for i, t1 in enumerate(self.theta1):
                writer.writerow([repr(float(t1)), *[repr(float(v)) for v in self.values[i]]])
        return path


def shared_policy_surface(env: DecPomdpSpec, alpha: float, theta1=None,
                          theta2=None,
                          node_budget: int = DEFAULT_NODE_BUDGET) -> SurfaceGrid:
    """Objective values for the shared two-parameter policy over a grid."""
    t1 = default_grid() if theta1 is None else np.asarray(theta1, dtype=float)
    t2 = default_grid() if theta2 is None else np.asarray(theta2, dtype=float)
    sk = _skeletons(env, node_budget)

    grid1, grid2 = np.meshgrid(t1, t2, indexing="ij")
    logits = np.stack([grid1, -grid1, grid2], axis=-1).reshape(-1, 3)
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    entropy = -(probs * np.log(probs)).sum(axis=1)  # probs > 0 for finite thetas

    traj_probs = sk.chance[None, :] * (
        probs[:, [0]] ** sk.counts[:, 0]
        * probs[:, [1]] ** sk.counts[:, 1]
        * probs[:, [2]] ** sk.counts[:, 2]
    )
    j = traj_probs @ sk.returns
    weight = traj_probs @ sk.ent_weight
    values = (j + alpha * entropy * weight).reshape(len(t1), len(t2))
    return SurfaceGrid(t1, t2, values, float(alpha))


def surface_check_value(env: DecPomdpSpec, alpha: float, theta1: float,
                        theta2: float) -> float:
    """`j_alpha` of one shared-policy point via the generic enumerator; slow
    path used to cross-check the vectorized surface."""
    from .policy import SharedSymmetricPolicy

    return j_alpha(env, SharedSymmetricPolicy(theta1, theta2), alpha)
