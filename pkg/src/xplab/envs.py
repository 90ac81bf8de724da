"""The toy cooperative games studied by this package.

Two families:

* one-round payoff-matrix games, where both agents act once on a shared dummy
  observation and the reward is `payoff[row_action][col_action]`;
* a two-step signalling game ("cat/dog"): a pet is drawn uniformly, Alice
  observes it and either signals ("on"/"off", reward 0), reveals it directly
  (a fixed penalty), or bails out of the episode; if she did not bail, Bob
  then sees only her signal (or the revealed pet) and guesses the pet or
  bails himself.

Action orderings are fixed: matrix actions are ("a1", ..., "am") in row
order; Alice's actions are ("on", "off", "reveal", "bail") and Bob's are
("guess-cat", "guess-dog", "bail").
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Aoh, DecPomdpSpec, validate_spec
from .hashing import canonical_digest

# Three-action game with two mutually incompatible optimal conventions
# (return 2 in self-play, -2 across conventions) and a safe symmetric
# third action worth 1 against anything.
TWO_CONVENTIONS_PAYOFF = (
    (2.0, -2.0, 1.0),
    (-2.0, 2.0, 1.0),
    (1.0, 1.0, 1.0),
)

# Three-action game where the two high-paying actions tie under symmetric
# training; the greedified 50/50 tie earns 1.5, below the symmetric optimum 2.
TIE_TRAP_PAYOFF = (
    (3.0, 0.0, 0.0),
    (0.0, 3.0, 0.0),
    (0.0, 0.0, 2.0),
)

ALICE_ACTIONS = ("on", "off", "reveal", "bail")
BOB_ACTIONS = ("guess-cat", "guess-dog", "bail")
WAIT = ("wait",)


def make_matrix_game(payoff) -> DecPomdpSpec:
    """One-round two-agent game with a square payoff matrix.

    Agent 0 picks the row, agent 1 the column; both see the same dummy
    observation, act once, and the episode ends.
    """
    m = np.asarray(payoff, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("payoff matrix must be square")
    if not np.all(np.isfinite(m)):
        raise ValueError("payoff matrix entries must be finite")
    k = int(m.shape[0])
    if k < 1:
        raise ValueError("payoff matrix must be at least 1x1")
    labels = tuple(f"a{i + 1}" for i in range(k))
    rewards = {(labels[i], labels[j]): float(m[i, j]) for i in range(k) for j in range(k)}
    to_done = np.array([0.0, 1.0])

    def local_actions(agent: int, aoh: Aoh):
        return labels

    def transition(state: int, joint):
        return to_done

    def reward(state: int, joint):
        return rewards[joint]

    def observe(agent: int, state: int) -> str:
        return "start" if state == 0 else "done"

    env = DecPomdpSpec(
        name=f"matrix-{k}x{k}",
        num_agents=2,
        state_labels=("start", "done"),
        terminal=frozenset({1}),
        initial_distribution=np.array([1.0, 0.0]),
        local_actions=local_actions,
        transition=transition,
        reward=reward,
        observe=observe,
        horizon=1,
        discount=1.0,
        config={"kind": "matrix", "payoff": [list(map(float, row)) for row in m]},
    )
    validate_spec(env)
    return env


def make_two_conventions_game() -> DecPomdpSpec:
    return make_matrix_game(TWO_CONVENTIONS_PAYOFF)


def make_tie_trap_game() -> DecPomdpSpec:
    return make_matrix_game(TIE_TRAP_PAYOFF)


@dataclass(frozen=True)
class CatDogSpec:
    """Parameters of the signalling game.

    With the defaults, total returns by branch are: reveal then correct
    guess 7, signal then correct guess 10, signal then wrong guess -10,
    Alice bails 1, Bob bails after a signal 1 and after a reveal -2.
    """

    reveal_reward: float = -3.0
    bail_reward: float = 1.0
    guess_reward_magnitude: float = 10.0

    def to_config(self) -> dict:
        return {
            "kind": "cat_dog",
            "reveal_reward": float(self.reveal_reward),
            "bail_reward": float(self.bail_reward),
            "guess_reward_magnitude": float(self.guess_reward_magnitude),
        }


_CAT_DOG_STATES = (
    "pet-cat",
    "pet-dog",
    "cat-revealed",
    "dog-revealed",
    "cat-on",
    "dog-on",
    "cat-off",
    "dog-off",
    "bailed",
    "end",
)
_PET_OF_STATE = {2: "cat", 3: "dog", 4: "cat", 5: "dog", 6: "cat", 7: "dog"}
_ALICE_OBS = {
    0: "pet-cat",
    1: "pet-dog",
    2: "revealed",
    3: "revealed",
    4: "signaled",
    5: "signaled",
    6: "signaled",
    7: "signaled",
    8: "bailed",
    9: "end",
}
_BOB_OBS = {
    0: "blank",
    1: "blank",
    2: "pet-cat-revealed",
    3: "pet-dog-revealed",
    4: "on",
    5: "on",
    6: "off",
    7: "off",
    8: "bailed",
    9: "end",
}


def make_cat_dog(spec: CatDogSpec | None = None) -> DecPomdpSpec:
    """Two-step signalling game. Agent 0 is Alice, agent 1 is Bob.

    The pet is drawn by the initial distribution (cat/dog, half each) and
    Alice observes it immediately. At step 0 only Alice has a real choice;
    at step 1 only Bob does (he never acts if Alice bailed, because her bail
    moves the game straight to a terminal state).
    """
    spec = spec or CatDogSpec()
    rows = [np.zeros(len(_CAT_DOG_STATES)) for _ in _CAT_DOG_STATES]
    for s, row in enumerate(rows):
        row[s] = 1.0
    one_hot = [np.asarray(r) for r in rows]
    step0 = {
        (0, "on"): 4, (0, "off"): 6, (0, "reveal"): 2, (0, "bail"): 8,
        (1, "on"): 5, (1, "off"): 7, (1, "reveal"): 3, (1, "bail"): 8,
    }

    def local_actions(agent: int, aoh: Aoh):
        if agent == 0:
            return ALICE_ACTIONS if len(aoh) == 1 else WAIT
        return BOB_ACTIONS if len(aoh) == 3 else WAIT

    def transition(state: int, joint):
        if state <= 1:
            return one_hot[step0[(state, joint[0])]]
        return one_hot[9]

    def reward(state: int, joint):
        if state <= 1:
            alice = joint[0]
            if alice == "reveal":
                return spec.reveal_reward
            if alice == "bail":
                return spec.bail_reward
            return 0.0
        bob = joint[1]
        if bob == "bail":
            return spec.bail_reward
        pet = _PET_OF_STATE[state]
        guessed = "cat" if bob == "guess-cat" else "dog"
        return spec.guess_reward_magnitude if guessed == pet else -spec.guess_reward_magnitude

    def observe(agent: int, state: int) -> str:
        return _ALICE_OBS[state] if agent == 0 else _BOB_OBS[state]

    init = np.zeros(len(_CAT_DOG_STATES))
    init[0] = init[1] = 0.5
    env = DecPomdpSpec(
        name="cat-dog",
        num_agents=2,
        state_labels=_CAT_DOG_STATES,
        terminal=frozenset({8, 9}),
        initial_distribution=init,
        local_actions=local_actions,
        transition=transition,
        reward=reward,
        observe=observe,
        horizon=2,
        discount=1.0,
        config=spec.to_config(),
    )
    validate_spec(env)
    return env


def build_env(config: dict) -> DecPomdpSpec:
    """Construct an environment from its JSON config description."""
    if not isinstance(config, dict) or "kind" not in config:
        raise ValueError("env.kind: missing environment kind")
    kind = config["kind"]
    if kind == "matrix":
        if "payoff" not in config:
            raise ValueError("env.payoff: missing payoff matrix")
        extra = set(config) - {"kind", "payoff"}
        if extra:
            raise ValueError(f"env.{sorted(extra)[0]}: unknown key")
        return make_matrix_game(config["payoff"])
    if kind == "cat_dog":
        extra = set(config) - {"kind", "reveal_reward", "bail_reward", "guess_reward_magnitude"}
        if extra:
            raise ValueError(f"env.{sorted(extra)[0]}: unknown key")
        defaults = CatDogSpec()
        return make_cat_dog(CatDogSpec(
            reveal_reward=float(config.get("reveal_reward", defaults.reveal_reward)),
            bail_reward=float(config.get("bail_reward", defaults.bail_reward)),
            guess_reward_magnitude=float(config.get("guess_reward_magnitude", defaults.guess_reward_magnitude)),
        ))
    raise ValueError(f"env.kind: unknown environment kind {kind!r}")


def env_digest(env: DecPomdpSpec) -> str:
    if env.config is None:
        raise ValueError(f"environment {env.name} has no config to digest")
    return canonical_digest(env.config)
