"""Strict JSON configuration for the command-line tools.

A config file is one JSON object with optional sections: "env" (environment
constructor), "train" (training hyperparameters), "sweep" (entropy
coefficients and seed counts), "eval" (scoring mode), and "landscape"
(surface grids). Unknown keys anywhere are errors that name the offending
dotted path, so typos fail loudly instead of silently running defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .envs import build_env
from .evaluate import EXACT, EvalMode, monte_carlo
from .hashing import canonical_digest
from .policy import DEFAULT_TIE_EPSILON
from .train import TrainConfig


class ConfigError(ValueError):
    """A config file problem; the message names the offending dotted key."""


def _check_keys(section: str, data: dict, allowed) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: must be an object")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}: unknown key")


@dataclass(frozen=True)
class GridSpec:
    """[low, high, points] for one surface axis."""

    lo: float
    hi: float
    num: int

    def build(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.num)

    @classmethod
    def parse(cls, section: str, raw) -> "GridSpec":
        if (not isinstance(raw, (list, tuple)) or len(raw) != 3):
            raise ConfigError(f"{section}: expected [low, high, points]")
        lo, hi, num = raw
        if not isinstance(num, int) or num < 2:
            raise ConfigError(f"{section}: points must be an integer >= 2")
        lo, hi = float(lo), float(hi)
        if not lo < hi:
            raise ConfigError(f"{section}: low must be below high")
        return cls(lo, hi, num)


_DEFAULT_GRID = GridSpec(-4.0, 4.0, 201)


@dataclass(frozen=True)
class SweepSettings:
    alphas: tuple[float, ...]
    seeds_per_alpha: int = 3
    master_seed: int = 0

    @classmethod
    def parse(cls, data: dict) -> "SweepSettings":
        _check_keys("sweep", data, {"alphas", "seeds_per_alpha", "master_seed"})
        if "alphas" not in data:
            raise ConfigError("sweep.alphas: required")
        alphas = data["alphas"]
        if not isinstance(alphas, (list, tuple)) or not alphas:
            raise ConfigError("sweep.alphas: must be a nonempty list")
        try:
            alphas = tuple(float(a) for a in alphas)
        except (TypeError, ValueError):
            raise ConfigError("sweep.alphas: entries must be numbers") from None
        if any(a < 0.0 for a in alphas):
            raise ConfigError("sweep.alphas: entries must be nonnegative")
        seeds = data.get("seeds_per_alpha", 3)
        if not isinstance(seeds, int) or seeds < 1:
            raise ConfigError("sweep.seeds_per_alpha: must be a positive integer")
        master = data.get("master_seed", 0)
        if not isinstance(master, int) or master < 0:
            raise ConfigError("sweep.master_seed: must be a nonnegative integer")
        return cls(alphas, seeds, master)


@dataclass(frozen=True)
class EvalSettings:
    exact: bool = True
    games: int = 10_000
    seed: int = 0
    tie_epsilon: float = DEFAULT_TIE_EPSILON

    def mode(self) -> EvalMode:
        return EXACT if self.exact else monte_carlo(self.games, self.seed)

    @classmethod
    def parse(cls, data: dict) -> "EvalSettings":
        _check_keys("eval", data, {"exact", "games", "seed", "tie_epsilon"})
        exact = data.get("exact", True)
        if not isinstance(exact, bool):
            raise ConfigError("eval.exact: must be true or false")
        games = data.get("games", 10_000)
        if not isinstance(games, int) or games < 1:
            raise ConfigError("eval.games: must be a positive integer")
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("eval.seed: must be a nonnegative integer")
        tie = data.get("tie_epsilon", DEFAULT_TIE_EPSILON)
        if not isinstance(tie, (int, float)) or tie < 0.0:
            raise ConfigError("eval.tie_epsilon: must be a nonnegative number")
        return cls(exact, games, seed, float(tie))


@dataclass(frozen=True)
class LandscapeSettings:
    alphas: tuple[float, ...]
    theta1: GridSpec = _DEFAULT_GRID
    theta2: GridSpec = _DEFAULT_GRID

    @classmethod
    def parse(cls, data: dict) -> "LandscapeSettings":
        _check_keys("landscape", data, {"alphas", "theta1", "theta2"})
        if "alphas" not in data:
            raise ConfigError("landscape.alphas: required")
        alphas = data["alphas"]
        if not isinstance(alphas, (list, tuple)) or not alphas:
            raise ConfigError("landscape.alphas: must be a nonempty list")
        try:
            alphas = tuple(float(a) for a in alphas)
        except (TypeError, ValueError):
            raise ConfigError("landscape.alphas: entries must be numbers") from None
        theta1 = GridSpec.parse("landscape.theta1", data["theta1"]) \
            if "theta1" in data else _DEFAULT_GRID
        theta2 = GridSpec.parse("landscape.theta2", data["theta2"]) \
            if "theta2" in data else _DEFAULT_GRID
        return cls(alphas, theta1, theta2)


@dataclass
class AppConfig:
    env: dict | None = None
    train: dict = field(default_factory=dict)
    sweep: SweepSettings | None = None
    eval_settings: EvalSettings = field(default_factory=EvalSettings)
    landscape: LandscapeSettings | None = None
    raw: dict = field(default_factory=dict)

    def digest(self) -> str:
        return canonical_digest(self.raw)

    def train_config(self, **overrides) -> TrainConfig:
        return TrainConfig.from_dict({**self.train, **overrides})

    def build_env(self):
        if self.env is None:
            raise ConfigError("env: required for this command")
        return build_env(self.env)


_TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)}
_SECTIONS = {"env", "train", "sweep", "eval", "landscape"}


def parse_config(data: dict, source: str = "config") -> AppConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    for key in data:
        if key not in _SECTIONS:
            raise ConfigError(f"{key}: unknown key")

    env = data.get("env")
    if env is not None:
        try:
            build_env(env)  # validates keys and game structure eagerly
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    train = data.get("train", {})
    _check_keys("train", train, _TRAIN_KEYS)
    try:
        TrainConfig.from_dict(dict(train))
    except ValueError as exc:
        raise ConfigError(f"train: {exc}") from exc

    sweep = SweepSettings.parse(data["sweep"]) if "sweep" in data else None
    eval_settings = EvalSettings.parse(data.get("eval", {}))
    scape = LandscapeSettings.parse(data["landscape"]) if "landscape" in data else None
    return AppConfig(env=env, train=dict(train), sweep=sweep,
                     eval_settings=eval_settings, landscape=scape, raw=data)


def load_config(path) -> AppConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(data, source=str(path))
