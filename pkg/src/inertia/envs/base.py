"""Common machinery for the deterministic text environments.

Every environment is a single-owner, seeded state machine: reset() returns
the initial observation, step() applies one text action. Rewards are 0
mid-episode and land in [0, 1] on the terminal step. Unparseable actions
produce corrective feedback and consume a step; ten consecutive invalid
actions end the episode.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import ClassVar

from inertia.errors import ConfigError, ContractError

TERM_GOAL = "goal"
TERM_FAILURE = "failure"
TERM_STEP_LIMIT = "step_limit"
TERM_INVALID_LIMIT = "invalid_action_limit"

INVALID_ACTION_LIMIT = 10


@dataclass(frozen=True)
class EnvSpec:
    """Environment id, seed, step budget, and difficulty knobs."""

    env: str
    seed: int = 0
    max_steps: int | None = None
    knobs: dict = field(default_factory=dict)

    def spec(self) -> str:
        parts = [self.env, str(self.seed)]
        items = [f"{k}={v}" for k, v in sorted(self.knobs.items())]
        if self.max_steps is not None:
            items.insert(0, f"max_steps={self.max_steps}")
        if items:
            parts.append(",".join(items))
        return ":".join(parts)


@dataclass(frozen=True)
class StepResult:
    observation: str
    reward: float = 0.0
    done: bool = False
    termination: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.reward <= 1.0:
            raise ContractError(f"reward {self.reward} outside [0, 1]")
        if self.reward > 0 and not self.done:
            raise ContractError("nonzero reward before the terminal step")


class InvalidAction(Exception):
    """Raised by environment dynamics when an action cannot be parsed or
    is not legal play; carries the corrective feedback text."""

    def __init__(self, feedback: str):
        super().__init__(feedback)
        self.feedback = feedback


class TextEnv:
    """Base episode driver; subclasses implement the dynamics."""

    env_id: ClassVar[str]
    default_max_steps: ClassVar[int]

    def __init__(self, spec: EnvSpec):
        if spec.env != self.env_id:
            raise ConfigError(f"spec is for {spec.env!r}, not {self.env_id!r}")
        self.spec = spec
        self.max_steps = spec.max_steps if spec.max_steps is not None else self.default_max_steps
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        self._rng = random.Random(spec.seed)
        self.steps = 0
        self.done = False
        self._invalid_streak = 0

    # -- subclass surface -------------------------------------------------

    @property
    def instructions(self) -> str:
        """System prompt: task rules and the action grammar."""
        raise NotImplementedError

    @property
    def goal_text(self) -> str:
        """Task statement for the goal message."""
        raise NotImplementedError

    def _initial_observation(self) -> str:
        raise NotImplementedError

    def _apply(self, action: str) -> StepResult:
        """Apply a parsed action; raise InvalidAction for junk input."""
        raise NotImplementedError

    def _partial_reward(self) -> float:
        """Reward when the episode is cut off (step or invalid limits)."""
        return 0.0

    def optimal_hint(self) -> str | None:
        """One action on a shortest solution path, if this environment
        has a solver; None otherwise."""
        return None

    def heuristic_action(self, rng: random.Random) -> str:
        raise NotImplementedError

    def random_action(self, rng: random.Random) -> str:
        raise NotImplementedError

    # -- episode loop ------------------------------------------------------

    def reset(self) -> str:
        return self._initial_observation()

    def step(self, action: str) -> StepResult:
        if self.done:
            raise ContractError("episode already finished")
        self.steps += 1
        try:
            result = self._apply(action.strip())
            self._invalid_streak = 0
        except InvalidAction as bad:
            self._invalid_streak += 1
            if self._invalid_streak >= INVALID_ACTION_LIMIT:
                self.done = True
                return StepResult(
                    observation=f"Invalid action: {bad.feedback}",
                    reward=_clamp01(self._partial_reward()),
                    done=True,
                    termination=TERM_INVALID_LIMIT,
                )
            result = StepResult(observation=f"Invalid action: {bad.feedback}")
        if not result.done and self.steps >= self.max_steps:
            result = StepResult(
                observation=result.observation + "\nStep limit reached.",
                reward=_clamp01(self._partial_reward()),
                done=True,
                termination=TERM_STEP_LIMIT,
            )
        self.done = result.done
        return result


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))
