"""Context-preference dataset construction via dual-context rollouts.

At each state of a rollout two actions are generated: one from the full
(or capped long) context and one from a short recent-rounds context. The
long-context action drives the environment, both context views advance on
the same shared history, and surviving (short prompt, short action,
long action) triples become preference records. No environment reward is
consulted anywhere in the pipeline.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from inertia import __version__
from inertia.agent import AgentBinding, chat_act, scripted_act
from inertia.conversation import Conversation, assemble_prompt
from inertia.envs import EnvSpec, make_env, parse_env_spec
from inertia.errors import ConfigError, ContractError

PAIR_FORMAT = "context-preference-pairs"


@dataclass(frozen=True)
class CplConfig:
    """Dual-rollout configuration.

    ``chosen_rounds`` is the short context size in rounds;
    ``rejected_rounds`` the long size (None = entire history). Sampling
    starts at turn ``min_turn`` so the two views have diverged, and
    ``dedup`` drops pairs whose two actions agree.
    """

    chosen_rounds: int = 6
    rejected_rounds: int | None = None
    min_turn: int = 20
    dedup: bool = True
    target_pairs: int = 1000
    pairs_per_episode: int = 5

    def __post_init__(self) -> None:
        if self.chosen_rounds < 1:
            raise ConfigError("chosen_rounds must be >= 1")
        if self.rejected_rounds is not None and self.rejected_rounds <= self.chosen_rounds:
            raise ConfigError("rejected_rounds must exceed chosen_rounds")
        if self.min_turn < 1:
            raise ConfigError("min_turn must be >= 1")
        if self.target_pairs < 1 or self.pairs_per_episode < 1:
            raise ConfigError("pair counts must be >= 1")

    def as_dict(self) -> dict:
        return {
            "chosen_rounds": self.chosen_rounds,
            "rejected_rounds": self.rejected_rounds,
            "min_turn": self.min_turn,
            "dedup": self.dedup,
            "target_pairs": self.target_pairs,
            "pairs_per_episode": self.pairs_per_episode,
        }


@dataclass(frozen=True)
class PreferencePair:
    """One training record: the short context is the prompt for both the
    chosen (short-context) and rejected (long-context) action."""

    prompt: tuple[tuple[str, str], ...]  # (role, content) pairs
    chosen: str
    rejected: str
    meta: dict = field(default_factory=dict)

    def prompt_messages(self) -> list[dict]:
        return [{"role": role, "content": content} for role, content in self.prompt]


class _CountingRng:
    """random.Random facade that counts draws, so sampling offsets can be
    recorded for replay."""

    def __init__(self, seed):
        self._rng = random.Random(seed)
        self.draws = 0

    def random(self) -> float:
        self.draws += 1
        return self._rng.random()

    def choice(self, seq):
        self.draws += 1
        return self._rng.choice(seq)

    def randrange(self, *args):
        self.draws += 1
        return self._rng.randrange(*args)

    def randint(self, a, b):
        self.draws += 1
        return self._rng.randint(a, b)


def _window_visible(t: int, size: int | None) -> tuple[int, ...]:
    if size is None:
        return tuple(range(1, t + 1))
    return tuple(range(max(1, t - size + 1), t + 1))


def collect_pairs(
    env_spec: EnvSpec | str,
    agent: AgentBinding,
    cfg: CplConfig,
    seed: int = 0,
    max_episodes: int = 1000,
) -> list[PreferencePair]:
    """Collect preference pairs from dual-context rollouts.

    Episodes run until ``cfg.target_pairs`` pairs exist or the episode
    budget is spent; the long-context action always drives the shared
    environment so both views see the same state history.
    """
    if isinstance(env_spec, str):
        env_spec = parse_env_spec(env_spec)
    pairs: list[PreferencePair] = []
    for episode in range(max_episodes):
        if len(pairs) >= cfg.target_pairs:
            break
        pairs.extend(
            _collect_episode(
                env_spec,
                agent,
                cfg,
                seed=seed + episode,
                remaining=cfg.target_pairs - len(pairs),
            )
        )
    return pairs[: cfg.target_pairs]


def _collect_episode(
    env_spec: EnvSpec,
    agent: AgentBinding,
    cfg: CplConfig,
    seed: int,
    remaining: int,
) -> list[PreferencePair]:
    spec = EnvSpec(env_spec.env, seed=seed, max_steps=env_spec.max_steps, knobs=env_spec.knobs)
    env = make_env(spec)
    rng = _CountingRng(f"cpl:{seed}")
    observation = env.reset()
    conv = Conversation.new(env.instructions, env.goal_text)
    pairs: list[PreferencePair] = []
    budget = min(remaining, cfg.pairs_per_episode)

    while True:
        conv = conv.begin_round(observation)
        t = conv.n_rounds
        long_visible = _window_visible(t, cfg.rejected_rounds)
        short_visible = _window_visible(t, cfg.chosen_rounds)
        long_messages = assemble_prompt(conv, long_visible)
        short_messages = assemble_prompt(conv, short_visible)

        offset_long = rng.draws
        action_long = _act(long_messages, agent, env, rng, t)
        offset_short = rng.draws
        action_short = _act(short_messages, agent, env, rng, t)

        if (
            len(pairs) < budget
            and t >= cfg.min_turn
            and len(long_visible) - len(short_visible) >= 1
            and (not cfg.dedup or action_long != action_short)
        ):
            pairs.append(
                PreferencePair(
                    prompt=tuple((m.role, m.content) for m in short_messages),
                    chosen=action_short,
                    rejected=action_long,
                    meta={
                        "env": spec.spec(),
                        "seed": seed,
                        "turn": t,
                        "long_rounds": len(long_visible),
                        "short_rounds": len(short_visible),
                        "rng_offset_long": offset_long,
                        "rng_offset_short": offset_short,
                    },
                )
            )

        conv = conv.complete_round(action_long)  # the long action drives the env
        result = env.step(action_long)
        if result.done:
            return pairs
        observation = result.observation


def _act(messages, agent: AgentBinding, env, rng, turn: int) -> str:
    if agent.kind == "scripted":
        action, _ = scripted_act(messages, agent.inertia, env, rng, turn)
        return action
    return chat_act(messages, agent, env.env_id)


# -- dataset files -------------------------------------------------------------


def export_dataset(pairs: list[PreferencePair], path, cfg: CplConfig | None = None) -> None:
    """Line-delimited JSON with a header line recording config and code
    version; one pair per following line, stable field order."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "format": PAIR_FORMAT,
            "version": __version__,
            "config": cfg.as_dict() if cfg else None,
            "pairs": len(pairs),
        }
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for pair in pairs:
            record = {
                "prompt": pair.prompt_messages(),
                "chosen": pair.chosen,
                "rejected": pair.rejected,
                "meta": pair.meta,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_dataset(path) -> tuple[dict, list[PreferencePair]]:
    """Inverse of export_dataset; returns (header, pairs)."""
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ContractError("empty dataset file")
    header = json.loads(lines[0])
    if header.get("format") != PAIR_FORMAT:
        raise ContractError(f"not a preference dataset: {path}")
    pairs = []
    for line in lines[1:]:
        rec = json.loads(line)
        pairs.append(
            PreferencePair(
                prompt=tuple((m["role"], m["content"]) for m in rec["prompt"]),
                chosen=rec["chosen"],
                rejected=rec["rejected"],
                meta=rec["meta"],
            )
        )
    return header, pairs
