"""Episode loop binding environments, context policies, and agents.

Two agent kinds: a scripted agent with an injectable imitation tendency
(the probability of copying a visible previous action grows with the
number of visible rounds), and a client for any OpenAI-compatible chat
endpoint. Episodes are deterministic given (env seed, agent seed, policy).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

from inertia.conversation import (
    Conversation,
    Message,
    ROLE_ASSISTANT,
    assemble_from_mask,
    assemble_prompt,
)
from inertia.envs import EnvSpec, TextEnv, default_max_steps, make_env, parse_env_spec
from inertia.errors import ConfigError, ProtocolError, TransportError
from inertia.policies import (
    KIND_SUMMARY,
    PolicyConfig,
    PolicyState,
    Summarizer,
    TruncatingSummarizer,
    build_mask,
    parse_policy_spec,
    update_after_round,
    visible_rounds,
)

API_KEY_ENV = "OPENAI_API_KEY"


@dataclass(frozen=True)
class InertiaModel:
    """Imitation tendency of the scripted agent.

    The probability of copying a visible previous action instead of asking
    the base policy is p(n) = p_max * (1 - exp(-rate * n)), nondecreasing
    in the number n of completed rounds visible in context.
    """

    p_max: float = 0.9
    rate: float = 0.3
    base_policy: str = "planner"  # planner | random | heuristic

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_max <= 1.0:
            raise ConfigError("p_max must be in [0, 1]")
        if self.rate <= 0:
            raise ConfigError("rate must be > 0")
        if self.base_policy not in ("planner", "random", "heuristic"):
            raise ConfigError(f"unknown base policy {self.base_policy!r}")

    def imitation_prob(self, n_visible: int) -> float:
        return self.p_max * (1.0 - math.exp(-self.rate * n_visible))


@dataclass(frozen=True)
class AgentBinding:
    """Either a scripted inertial agent or a chat-completions endpoint."""

    kind: str  # scripted | chat_endpoint
    inertia: InertiaModel = field(default_factory=InertiaModel)
    base_url: str = ""
    model: str = ""
    temperature: float = 0.8
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.kind not in ("scripted", "chat_endpoint"):
            raise ConfigError(f"unknown agent kind {self.kind!r}")
        if self.kind == "chat_endpoint" and not self.base_url:
            raise ConfigError("chat_endpoint agent requires a base_url")


def parse_agent_spec(spec: str) -> AgentBinding:
    """Parse "scripted[:k=v,...]" or "chat:<base_url>[,model=...,...]"."""
    text = spec.strip()
    if text.startswith("scripted"):
        params: dict[str, str] = {}
        if ":" in text:
            for pair in text.split(":", 1)[1].split(","):
                if pair:
                    key, _, value = pair.partition("=")
                    params[key.strip()] = value.strip()
        inertia = InertiaModel(
            p_max=float(params.get("p_max", 0.9)),
            rate=float(params.get("rate", 0.3)),
            base_policy=params.get("base", "planner"),
        )
        return AgentBinding(kind="scripted", inertia=inertia)
    if text.startswith("chat:"):
        rest = text[len("chat:") :]
        parts = rest.split(",")
        base_url = parts[0]
        params = {}
        for pair in parts[1:]:
            key, _, value = pair.partition("=")
            params[key.strip()] = value.strip()
        return AgentBinding(
            kind="chat_endpoint",
            base_url=base_url,
            model=params.get("model", "default"),
            temperature=float(params.get("temperature", 0.8)),
            timeout=float(params.get("timeout", 30.0)),
        )
    raise ConfigError(f"bad agent spec {spec!r}")


# -- scripted agent ------------------------------------------------------------


def scripted_act(
    messages: list[Message],
    inertia: InertiaModel,
    env: TextEnv,
    rng: random.Random,
    turn: int,
) -> tuple[str, bool]:
    """Produce an action from the assembled context.

    With probability p(n) the agent imitates: it replays the visible action
    at the position matching the current turn's offset one cycle back
    (turn-1 mod n), falling back to the most recent visible action. The
    environment is consulted only for the base policy's action, mirroring
    an agent that acts from the prompt when it imitates. Returns
    (action, imitated).
    """
    visible_actions = [m.content for m in messages if m.role == ROLE_ASSISTANT]
    n = len(visible_actions)
    imitate = rng.random() < inertia.imitation_prob(n)
    if imitate and visible_actions:
        index = (turn - 1) % n if n else 0
        action = visible_actions[index] if index < n else visible_actions[-1]
        return action, True
    return _base_action(inertia.base_policy, env, rng), False


def _base_action(base_policy: str, env: TextEnv, rng: random.Random) -> str:
    if base_policy == "random":
        return env.random_action(rng)
    if base_policy == "heuristic":
        return env.heuristic_action(rng)
    hint = env.optimal_hint()
    if hint is not None:
        return hint
    return env.heuristic_action(rng)


# -- chat endpoint agent -------------------------------------------------------


_BRACKET_RE = re.compile(r"\[[^\[\]]+\]")
_DIRECTION_RE = re.compile(r"\b(up|down|left|right)\b", re.IGNORECASE)
_CRAFT_RE = re.compile(
    r"^(?:craft\s+.+\s+using\s+.+|get\s+\S.*|inventory)\s*$", re.IGNORECASE | re.MULTILINE
)

_EXTRACTORS = {
    "2048": "bracket",
    "hangman": "bracket",
    "rushhour": "bracket",
    "maze": "direction",
    "frozenlake": "direction",
    "textcraft": "craft",
}


def extract_action(text: str, env_id: str) -> str:
    """Pull the action token out of free-text model output; returns the raw
    text when no grammar pattern matches."""
    style = _EXTRACTORS.get(env_id)
    if style == "bracket":
        matches = _BRACKET_RE.findall(text)
        if matches:
            return matches[-1]
    elif style == "direction":
        matches = _DIRECTION_RE.findall(text)
        if matches:
            return matches[-1].lower()
    elif style == "craft":
        matches = _CRAFT_RE.findall(text)
        if matches:
            return matches[-1].strip()
    return text.strip()


def chat_act(messages: list[Message], binding: AgentBinding, env_id: str | None = None) -> str:
    """One chat-completions request; raises TransportError for HTTP or
    connection failures and ProtocolError for malformed bodies."""
    if not messages or messages[0].role != "system":
        raise ConfigError("chat messages must start with a system message")
    url = binding.base_url.rstrip("/") + "/chat/completions"
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    payload = {
        "model": binding.model,
        "messages": [m.as_chat_dict() for m in messages],
        "temperature": binding.temperature,
    }
    try:
        response = requests.post(url, json=payload, headers=headers, timeout=binding.timeout)
    except requests.RequestException as exc:
        raise TransportError(f"chat endpoint unreachable: {exc}") from exc
    if response.status_code >= 400:
        raise TransportError(f"chat endpoint returned HTTP {response.status_code}")
    try:
        body = response.json()
        content = body["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"malformed chat completion body: {exc}") from exc
    if not isinstance(content, str):
        raise ProtocolError("chat completion content is not text")
    return extract_action(content, env_id) if env_id else content.strip()


# -- episode runner ------------------------------------------------------------


@dataclass(frozen=True)
class StepEntry:
    turn: int
    visible_rounds: int
    action: str
    imitated: bool
    reward: float


@dataclass(frozen=True)
class EpisodeRecord:
    env: str
    policy: str
    seed: int
    steps: tuple[StepEntry, ...]
    final_reward: float
    termination: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "env": self.env,
                "policy": self.policy,
                "seed": self.seed,
                "final_reward": self.final_reward,
                "termination": self.termination,
                "steps": [
                    {
                        "turn": s.turn,
                        "visible_rounds": s.visible_rounds,
                        "action": s.action,
                        "imitated": s.imitated,
                        "reward": s.reward,
                    }
                    for s in self.steps
                ],
            }
        )


def run_episode(
    env_spec: EnvSpec | str,
    policy: PolicyConfig | str,
    agent: AgentBinding,
    seed: int = 0,
    *,
    context_mode: str = "trim",
    summarizer: Summarizer | None = None,
    init_rounds: tuple[tuple[str, str], ...] = (),
) -> EpisodeRecord:
    """Run one episode: observe, assemble the visible context, act, step.

    ``context_mode`` selects how the prompt is built from the policy:
    "trim" assembles over visible_rounds, "mask" builds the boolean round
    mask and assembles from it; both must produce identical behavior.
    ``init_rounds`` pre-seeds the conversation with (observation, action)
    rounds before the loop starts, for context-influence case studies.
    """
    if isinstance(env_spec, str):
        env_spec = parse_env_spec(env_spec)
    if isinstance(policy, str):
        policy = parse_policy_spec(policy)
    if context_mode not in ("trim", "mask"):
        raise ConfigError(f"unknown context mode {context_mode!r}")
    if policy.kind == KIND_SUMMARY and summarizer is None:
        summarizer = TruncatingSummarizer()

    env = make_env(env_spec)
    agent_rng = random.Random(f"agent:{seed}")
    observation = env.reset()
    conv = Conversation.new(env.instructions, env.goal_text)
    state = PolicyState()
    for obs_text, action_text in init_rounds:
        conv = conv.append_round(obs_text, action_text)
        state = update_after_round(policy, state, conv.n_rounds, summarizer, conv)

    entries: list[StepEntry] = []
    final_reward = 0.0
    termination = "step_limit"
    while True:
        conv = conv.begin_round(observation)
        t = conv.n_rounds
        visible = visible_rounds(policy, state, t)
        if context_mode == "trim":
            messages = assemble_prompt(conv, visible, state.summaries)
        else:
            mask = build_mask(policy, state, t, conv)
            messages = assemble_from_mask(conv, mask, state.summaries)
        if agent.kind == "scripted":
            action, imitated = scripted_act(messages, agent.inertia, env, agent_rng, t)
        else:
            action, imitated = chat_act(messages, agent, env_spec.env), False
        conv = conv.complete_round(action)
        state = update_after_round(policy, state, t, summarizer, conv)
        result = env.step(action)
        entries.append(StepEntry(t, len(visible), action, imitated, result.reward))
        if result.done:
            final_reward = result.reward
            termination = result.termination or "step_limit"
            break
        observation = result.observation

    return EpisodeRecord(
        env=env_spec.spec(),
        policy=policy.spec(),
        seed=seed,
        steps=tuple(entries),
        final_reward=final_reward,
        termination=termination,
    )


@dataclass(frozen=True)
class CellResult:
    env: str
    policy: str
    episodes: int
    mean: float
    sem: float
    aborted: int


def episode_seed(base_seed: int, env_key: str, index: int) -> int:
    """Paired-seed scheme: the same env/index gives the same seed for every
    policy, so policy comparisons are paired."""
    digest = hashlib.sha256(f"{base_seed}:{env_key}:{index}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def run_batch(
    env_specs: list[EnvSpec | str],
    policies: list[PolicyConfig | str],
    agent: AgentBinding,
    episodes: int,
    *,
    step_multiplier: float = 1.0,
    seed: int = 0,
    jobs: int = 1,
) -> list[CellResult]:
    """Mean/SEM reward per (env, policy) cell over paired-seed episodes.

    ``step_multiplier`` in (0, 2] rescales each environment's default step
    limit. Transport-failed episodes are excluded from the mean and
    counted in ``aborted``.
    """
    if not 0 < step_multiplier <= 2:
        raise ConfigError("step multiplier must be in (0, 2]")
    specs = [parse_env_spec(s) if isinstance(s, str) else s for s in env_specs]
    cfgs = [parse_policy_spec(p) if isinstance(p, str) else p for p in policies]

    tasks = []
    for spec in specs:
        limit = round(step_multiplier * (spec.max_steps or default_max_steps(spec.env)))
        for cfg in cfgs:
            for i in range(episodes):
                ep_seed = episode_seed(seed, f"{spec.env}:{spec.seed}", i)
                run_spec = EnvSpec(spec.env, seed=ep_seed, max_steps=limit, knobs=spec.knobs)
                tasks.append((spec, cfg, i, run_spec, ep_seed))

    def run_one(task):
        _spec, cfg, _i, run_spec, ep_seed = task
        try:
            record = run_episode(run_spec, cfg, agent, seed=ep_seed)
            return record.final_reward
        except (TransportError, ProtocolError):
            return None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rewards = list(pool.map(run_one, tasks))
    else:
        rewards = [run_one(task) for task in tasks]

    results = []
    cursor = 0
    for spec in specs:
        for cfg in cfgs:
            cell = rewards[cursor : cursor + episodes]
            cursor += episodes
            kept = [r for r in cell if r is not None]
            aborted = episodes - len(kept)
            mean, sem = mean_sem(kept)
            results.append(
                CellResult(
                    env=spec.env,
                    policy=cfg.spec(),
                    episodes=len(kept),
                    mean=mean,
                    sem=sem,
                    aborted=aborted,
                )
            )
    return results


def mean_sem(values: list[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)
