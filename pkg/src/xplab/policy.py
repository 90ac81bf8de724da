"""Tabular softmax joint policies over per-agent action-observation histories.

A `TabularJointPolicy` keeps one logit vector per (agent, AOH) and produces
action probabilities through a max-subtracted softmax. Unseen AOHs are
lazily registered with zero logits (a uniform distribution), optionally
perturbed by Gaussian noise drawn from the policy's creation seed; a frozen
policy refuses new AOHs instead, raising an error that names the agent and
the AOH.

Greedification maps each logit vector to {0, -inf}: probability mass 1/K on
each of the K maximum-probability actions and exactly 0 elsewhere. The
tie-tolerant variant treats any action whose probability is within a
relative epsilon of the maximum as tied; epsilon 0 recovers exact ties.

`SharedSymmetricPolicy` is the constrained two-parameter family for
three-action one-shot games: both agents play softmax(theta1, -theta1,
theta2) at every AOH, so theta1 = 0 pins the first two actions to exactly
equal probability.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Aoh, aoh_key
from .version import VERSION

DEFAULT_TIE_EPSILON = 1e-9

POLICY_FORMAT = "xplab-policy/1"


class MissingAohError(LookupError):
    def __init__(self, agent: int, aoh: Aoh):
        super().__init__(f"agent {agent} has no policy entry for AOH '{aoh_key(aoh)}'")
        self.agent = agent
        self.aoh = aoh


@dataclass(frozen=True)
class _Dist:
    probs: np.ndarray
    logprobs: np.ndarray
    entropy: float


def softmax(logits) -> np.ndarray:
    """Max-subtracted softmax; safe for large logits and for -inf entries."""
    return _softmax_dist(np.asarray(logits, dtype=float)).probs


def _softmax_dist(logits: np.ndarray) -> _Dist:
    z = logits - logits.max()
    e = np.exp(z)
    total = e.sum()
    probs = e / total
    logprobs = z - math.log(total)
    # where= keeps 0 * -inf (zero-probability actions) out of the product
    plogp = np.multiply(probs, logprobs, out=np.zeros_like(probs), where=probs > 0.0)
    return _Dist(probs, logprobs, float(-plogp.sum()))


def _tie_mask(probs: np.ndarray, tie_epsilon: float) -> np.ndarray:
    if tie_epsilon < 0.0:
        raise ValueError("tie epsilon must be nonnegative")
    top = probs.max()
    return probs >= top * (1.0 - tie_epsilon)


class TabularJointPolicy:
    """Per-agent logit tables keyed by AOH, with a flat parameter view.

    The flat parameter vector concatenates every registered logit vector in
    registration order; gradient code accumulates into a buffer of the same
    length via `accumulate_logprob_grad`.
    """

    def __init__(self, num_agents: int, *, seed: int = 0, init_noise_scale: float = 0.0,
                 frozen: bool = False):
        if num_agents < 1:
            raise ValueError("num_agents must be at least 1")
        if init_noise_scale < 0.0:
            raise ValueError("init_noise_scale must be nonnegative")
        self.num_agents = num_agents
        self.creation_seed = seed
        self.init_noise_scale = init_noise_scale
        self.frozen = frozen
        self._logits: list[dict[Aoh, np.ndarray]] = [dict() for _ in range(num_agents)]
        self._acts: list[dict[Aoh, tuple[str, ...]]] = [dict() for _ in range(num_agents)]
        self._order: list[tuple[int, Aoh]] = []
        self._offsets: dict[tuple[int, Aoh], int] = {}
        self._size = 0
        self._dist_cache: dict[tuple[int, Aoh], _Dist] = {}
        self._init_rng = np.random.default_rng(seed)

    # -- registration and lookup ------------------------------------------

    def ensure_aoh(self, agent: int, aoh: Aoh, actions) -> None:
        if aoh in self._logits[agent]:
            return
        if self.frozen:
            raise MissingAohError(agent, aoh)
        actions = tuple(actions)
        if len(actions) < 1:
            raise ValueError("an AOH needs at least one action")
        logits = np.zeros(len(actions))
        if self.init_noise_scale > 0.0:
            logits += self.init_noise_scale * self._init_rng.standard_normal(len(actions))
        self._logits[agent][aoh] = logits
        self._acts[agent][aoh] = actions
        self._offsets[(agent, aoh)] = self._size
        self._size += len(actions)
        self._order.append((agent, aoh))

    def has_aoh(self, agent: int, aoh: Aoh) -> bool:
        return aoh in self._logits[agent]

    def aohs(self, agent: int):
        return self._logits[agent].keys()

    def actions(self, agent: int, aoh: Aoh) -> tuple[str, ...]:
        return self._acts[agent][aoh]

    def logits(self, agent: int, aoh: Aoh) -> np.ndarray:
        return self._logits[agent][aoh].copy()

    def set_logits(self, agent: int, aoh: Aoh, values, actions=None) -> None:
        if aoh not in self._logits[agent]:
            if actions is None:
                raise MissingAohError(agent, aoh)
            self.ensure_aoh(agent, aoh, actions)
        values = np.asarray(values, dtype=float)
        if values.shape != self._logits[agent][aoh].shape:
            raise ValueError("logit vector has the wrong length")
        self._logits[agent][aoh] = values.copy()
        self._dist_cache.pop((agent, aoh), None)

    def _dist(self, agent: int, aoh: Aoh, actions=None) -> _Dist:
        d = self._dist_cache.get((agent, aoh))
        if d is None:
            if aoh not in self._logits[agent]:
                if actions is None:
                    raise MissingAohError(agent, aoh)
                self.ensure_aoh(agent, aoh, actions)
            d = _softmax_dist(self._logits[agent][aoh])
            self._dist_cache[(agent, aoh)] = d
        return d

    def action_probs(self, agent: int, aoh: Aoh, actions=None) -> np.ndarray:
        return self._dist(agent, aoh, actions).probs

    def log_probs(self, agent: int, aoh: Aoh, actions=None) -> np.ndarray:
        return self._dist(agent, aoh, actions).logprobs

    def entropy(self, agent: int, aoh: Aoh, actions=None) -> float:
        return self._dist(agent, aoh, actions).entropy

    # -- flat parameter view ----------------------------------------------

    @property
    def num_params(self) -> int:
        return self._size

    def param_layout(self):
        """(agent, aoh, offset, actions) for every registered decision point."""
        return [
            (agent, aoh, self._offsets[(agent, aoh)], self._acts[agent][aoh])
            for agent, aoh in self._order
        ]

    def param_slice(self, agent: int, aoh: Aoh) -> slice:
        off = self._offsets[(agent, aoh)]
        return slice(off, off + len(self._logits[agent][aoh]))

    def params_vector(self) -> np.ndarray:
        out = np.empty(self._size)
        for agent, aoh in self._order:
            off = self._offsets[(agent, aoh)]
            v = self._logits[agent][aoh]
            out[off:off + len(v)] = v
        return out

    def set_params_vector(self, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (self._size,):
            raise ValueError("parameter vector has the wrong length")
        for agent, aoh in self._order:
            off = self._offsets[(agent, aoh)]
            n = len(self._logits[agent][aoh])
            self._logits[agent][aoh] = values[off:off + n].copy()
        self._dist_cache.clear()

    def apply_flat_step(self, delta) -> None:
        delta = np.asarray(delta, dtype=float)
        if delta.shape != (self._size,):
            raise ValueError("step vector has the wrong length")
        for agent, aoh in self._order:
            off = self._offsets[(agent, aoh)]
            v = self._logits[agent][aoh]
            v += delta[off:off + len(v)]
        self._dist_cache.clear()

    def accumulate_logprob_grad(self, agent: int, aoh: Aoh, action_index: int,
                                coeff: float, out: np.ndarray) -> None:
        """out[slice] += coeff * d log pi(action | aoh) / d logits."""
        d = self._dist(agent, aoh)
        off = self._offsets[(agent, aoh)]
        sl = out[off:off + len(d.probs)]
        sl -= coeff * d.probs
        sl[action_index] += coeff

    # -- derived policies ---------------------------------------------------

    def greedified(self, tie_epsilon: float = 0.0) -> "TabularJointPolicy":
        g = TabularJointPolicy(self.num_agents, seed=self.creation_seed)
        for agent, aoh in self._order:
            mask = _tie_mask(self._dist(agent, aoh).probs, tie_epsilon)
            g.ensure_aoh(agent, aoh, self._acts[agent][aoh])
            g.set_logits(agent, aoh, np.where(mask, 0.0, -np.inf))
        return g

    def snapshot(self) -> "TabularJointPolicy":
        return copy.deepcopy(self)

    # -- serialization ------------------------------------------------------

    def to_payload(self) -> dict:
        agents = []
        for agent in range(self.num_agents):
            entries = []
            for aoh in sorted(self._logits[agent], key=aoh_key):
                entries.append({
                    "aoh": aoh_key(aoh),
                    "actions": list(self._acts[agent][aoh]),
                    "logits": [float(x).hex() for x in self._logits[agent][aoh]],
                })
            agents.append({"agent": agent, "entries": entries})
        return {
            "type": "tabular",
            "num_agents": self.num_agents,
            "creation_seed": self.creation_seed,
            "init_noise_scale": self.init_noise_scale,
            "agents": agents,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TabularJointPolicy":
        pol = cls(int(payload["num_agents"]),
                  seed=payload.get("creation_seed", 0),
                  init_noise_scale=float(payload.get("init_noise_scale", 0.0)))
        for block in payload["agents"]:
            agent = int(block["agent"])
            for entry in block["entries"]:
                aoh = tuple(entry["aoh"].split("|"))
                actions = tuple(entry["actions"])
                logits = np.array([float.fromhex(h) for h in entry["logits"]])
                pol.ensure_aoh(agent, aoh, actions)
                pol.set_logits(agent, aoh, logits)
        return pol


class FixedDistributionPolicy:
    """Plays one fixed distribution at every AOH of every agent."""

    frozen = False
    creation_seed = None

    def __init__(self, probs, num_agents: int = 2):
        self.num_agents = num_agents
        self._probs = np.asarray(probs, dtype=float)

    def action_probs(self, agent: int, aoh: Aoh, actions=None) -> np.ndarray:
        if actions is not None and len(actions) != len(self._probs):
            raise ValueError(
                f"fixed distribution over {len(self._probs)} actions cannot act on "
                f"{len(actions)} local actions"
            )
        return self._probs

    def ensure_aoh(self, agent: int, aoh: Aoh, actions) -> None:
        if len(actions) != len(self._probs):
            raise ValueError("action count mismatch for fixed-distribution policy")

    def greedified(self, tie_epsilon: float = 0.0) -> "FixedDistributionPolicy":
        mask = _tie_mask(self._probs, tie_epsilon)
        return FixedDistributionPolicy(mask / mask.sum(), self.num_agents)

    def snapshot(self) -> "FixedDistributionPolicy":
        return FixedDistributionPolicy(self._probs.copy(), self.num_agents)


class SharedSymmetricPolicy:
    """Two parameters, logits (theta1, -theta1, theta2), shared by both agents."""

    num_agents = 2
    frozen = False
    creation_seed = None

    def __init__(self, theta1: float = 0.0, theta2: float = 0.0):
        self._theta = np.array([float(theta1), float(theta2)])
        self._cache: _Dist | None = None

    @property
    def theta1(self) -> float:
        return float(self._theta[0])

    @property
    def theta2(self) -> float:
        return float(self._theta[1])

    def _dist(self) -> _Dist:
        if self._cache is None:
            t1, t2 = self._theta
            self._cache = _softmax_dist(np.array([t1, -t1, t2]))
        return self._cache

    def _check(self, actions) -> None:
        if actions is not None and len(actions) != 3:
            raise ValueError("the shared symmetric policy needs exactly 3 local actions")

    def action_probs(self, agent: int, aoh: Aoh, actions=None) -> np.ndarray:
        self._check(actions)
        return self._dist().probs

    def log_probs(self, agent: int, aoh: Aoh, actions=None) -> np.ndarray:
        self._check(actions)
        return self._dist().logprobs

    def entropy(self, agent: int, aoh: Aoh, actions=None) -> float:
        self._check(actions)
        return self._dist().entropy

    def ensure_aoh(self, agent: int, aoh: Aoh, actions) -> None:
        self._check(actions)

    @property
    def num_params(self) -> int:
        return 2

    def param_layout(self):
        return [(-1, ("shared",), 0, ("theta1", "theta2"))]

    def params_vector(self) -> np.ndarray:
        return self._theta.copy()

    def set_params_vector(self, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (2,):
            raise ValueError("parameter vector has the wrong length")
        self._theta = values.copy()
        self._cache = None

    def apply_flat_step(self, delta) -> None:
        self._theta = self._theta + np.asarray(delta, dtype=float)
        self._cache = None

    def accumulate_logprob_grad(self, agent: int, aoh: Aoh, action_index: int,
                                coeff: float, out: np.ndarray) -> None:
        # chain rule through logits = (theta1, -theta1, theta2)
        p = self._dist().probs
        g = -p.copy()
        g[action_index] += 1.0
        out[0] += coeff * (g[0] - g[1])
        out[1] += coeff * g[2]

    def greedified(self, tie_epsilon: float = 0.0) -> FixedDistributionPolicy:
        mask = _tie_mask(self._dist().probs, tie_epsilon)
        return FixedDistributionPolicy(mask / mask.sum(), self.num_agents)

    def snapshot(self) -> "SharedSymmetricPolicy":
        return SharedSymmetricPolicy(self.theta1, self.theta2)

    def to_payload(self) -> dict:
        return {
            "type": "shared-symmetric",
            "num_agents": 2,
            "theta": [float(self._theta[0]).hex(), float(self._theta[1]).hex()],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "SharedSymmetricPolicy":
        t1, t2 = (float.fromhex(h) for h in payload["theta"])
        return cls(t1, t2)


# -- module-level operations -------------------------------------------------

def action_probs(policy, agent: int, aoh: Aoh, actions=None) -> np.ndarray:
    return policy.action_probs(agent, aoh, actions)


def policy_entropy(policy, agent: int, aoh: Aoh, actions=None) -> float:
    """Shannon entropy (natural log) of the local action distribution; the
    0*log(0) contribution of zero-probability actions is 0."""
    if hasattr(policy, "entropy"):
        return policy.entropy(agent, aoh, actions)
    p = policy.action_probs(agent, aoh, actions)
    logs = np.log(p, out=np.zeros_like(p), where=p > 0.0)
    return float(-(p * logs).sum())


def greedify(policy):
    """Uniform mixture over each AOH's exactly-maximal-probability actions."""
    return policy.greedified(0.0)


def tie_tolerance_greedify(policy, epsilon: float):
    """Greedify, treating probabilities within a relative `epsilon` of the
    per-AOH maximum as tied. Epsilon 0 reproduces `greedify`."""
    return policy.greedified(epsilon)


# -- file round-trip ----------------------------------------------------------

def policy_payload(policy, provenance: dict | None = None) -> dict:
    payload = policy.to_payload()
    payload["format"] = POLICY_FORMAT
    payload["tool_version"] = VERSION
    payload["provenance"] = provenance
    return payload


def save_payload(payload: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    return path


def save_policy(policy, path, provenance: dict | None = None) -> Path:
    """Write a policy as JSON. Logits are hex floats, so loading is bit-exact."""
    return save_payload(policy_payload(policy, provenance), path)


def policy_from_payload(payload: dict):
    if payload.get("format") != POLICY_FORMAT:
        raise ValueError(f"not a policy file (format={payload.get('format')!r})")
    kind = payload.get("type")
    if kind == "tabular":
        return TabularJointPolicy.from_payload(payload)
    if kind == "shared-symmetric":
        return SharedSymmetricPolicy.from_payload(payload)
    raise ValueError(f"unknown policy type {kind!r}")


def load_policy(path):
    """Read back a saved policy; returns (policy, provenance dict or None).

    Loaded tabular policies come back frozen: evaluating one on an
    environment it was not trained for raises `MissingAohError` instead of
    silently playing uniform at unknown decision points. Set `frozen = False`
    to fine-tune a loaded policy on a compatible environment.
    """
    payload = json.loads(Path(path).read_text())
    policy = policy_from_payload(payload)
    policy.frozen = True
    return policy, payload.get("provenance")
