"""Environment registry and spec-string parsing.

Spec strings look like "<env>:<seed>[:knob=value,...]", e.g. "maze:7",
"rushhour:3:difficulty=hard", "2048:11:target=64,max_steps=30".
"""

from __future__ import annotations

from inertia.envs.base import (
    EnvSpec,
    InvalidAction,
    StepResult,
    TERM_FAILURE,
    TERM_GOAL,
    TERM_INVALID_LIMIT,
    TERM_STEP_LIMIT,
    TextEnv,
)
from inertia.envs.frozen_lake import FrozenLakeEnv
from inertia.envs.game2048 import Game2048Env
from inertia.envs.hangman import HangmanEnv
from inertia.envs.maze import MazeEnv
from inertia.envs.rush_hour import RushHourEnv
from inertia.envs.textcraft import TextCraftEnv
from inertia.errors import ConfigError

ENVIRONMENTS: dict[str, type[TextEnv]] = {
    cls.env_id: cls
    for cls in (MazeEnv, FrozenLakeEnv, Game2048Env, HangmanEnv, RushHourEnv, TextCraftEnv)
}


def parse_env_spec(spec: str) -> EnvSpec:
    parts = spec.strip().split(":")
    if not parts or parts[0].lower() not in ENVIRONMENTS:
        raise ConfigError(f"unknown environment in spec {spec!r}")
    env = parts[0].lower()
    seed = int(parts[1]) if len(parts) > 1 and parts[1] else 0
    knobs: dict = {}
    max_steps = None
    if len(parts) > 2 and parts[2]:
        for pair in parts[2].split(","):
            if "=" not in pair:
                raise ConfigError(f"bad knob {pair!r} in spec {spec!r}")
            key, value = pair.split("=", 1)
            if key.strip() == "max_steps":
                max_steps = int(value)
            else:
                knobs[key.strip()] = value.strip()
    return EnvSpec(env=env, seed=seed, max_steps=max_steps, knobs=knobs)


def make_env(spec: EnvSpec | str) -> TextEnv:
    if isinstance(spec, str):
        spec = parse_env_spec(spec)
    return ENVIRONMENTS[spec.env](spec)


def default_max_steps(env: str) -> int:
    return ENVIRONMENTS[env].default_max_steps


__all__ = [
    "ENVIRONMENTS",
    "EnvSpec",
    "InvalidAction",
    "StepResult",
    "TERM_FAILURE",
    "TERM_GOAL",
    "TERM_INVALID_LIMIT",
    "TERM_STEP_LIMIT",
    "TextEnv",
    "default_max_steps",
    "make_env",
    "parse_env_spec",
]
