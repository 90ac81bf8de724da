"""Shared fixtures: the three bundled games and seeded random policies."""

import numpy as np
import pytest

from xplab.core import register_reachable_aohs
from xplab.envs import make_cat_dog, make_tie_trap_game, make_two_conventions_game
from xplab.policy import TabularJointPolicy


@pytest.fixture
def conventions_env():
    return make_two_conventions_game()


@pytest.fixture
def tie_trap_env():
    return make_tie_trap_game()


@pytest.fixture
def cat_dog_env():
    return make_cat_dog()


class UniformPolicy:
    """Uniform over whatever local actions the environment offers."""

    frozen = False

    def action_probs(self, agent, aoh, actions=None):
        k = len(actions)
        return np.full(k, 1.0 / k)

    def ensure_aoh(self, agent, aoh, actions):
        pass


def random_tabular_policy(env, seed, scale=1.0):
    """A fully registered tabular policy with seeded normal logits."""
    policy = TabularJointPolicy(env.num_agents, seed=seed)
    register_reachable_aohs(env, policy)
    rng = np.random.default_rng(seed)
    theta = rng.normal(0.0, scale, size=policy.num_params)
    policy.set_params_vector(theta)
    return policy
