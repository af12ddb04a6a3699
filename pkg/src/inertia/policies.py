"""Round-level context policies: long, window, clip, and summary.

All four strategies are visibility functions over the round history. The
clip family follows the trimming recurrence: rounds accumulate until the
visible count would reach the clearing threshold H, at which point only
the most recent L rounds survive. The summary variant additionally
compresses the cleared context into a text block that is prepended to
later prompts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

from inertia.conversation import Conversation, Round
from inertia.errors import ConfigError, ContractError

KIND_LONG = "long"
KIND_WINDOW = "window"
KIND_CLIP = "clip"
KIND_SUMMARY = "summary"


@dataclass(frozen=True)
class PolicyConfig:
    """Configured context strategy.

    window_size applies to window; clear_threshold (>= 2) and
    retain_recent (0 <= retain < threshold) apply to clip and summary.
    """

    kind: str
    window_size: int | None = None
    clear_threshold: int | None = None
    retain_recent: int | None = None

    def __post_init__(self) -> None:
        if self.kind == KIND_LONG:
            return
        if self.kind == KIND_WINDOW:
            if self.window_size is None or self.window_size < 1:
                raise ConfigError("window policy requires window_size >= 1")
            return
        if self.kind in (KIND_CLIP, KIND_SUMMARY):
            if self.clear_threshold is None or self.clear_threshold < 2:
                raise ConfigError("clip/summary require clear_threshold >= 2")
            if self.retain_recent is None or not 0 <= self.retain_recent < self.clear_threshold:
                raise ConfigError("clip/summary require 0 <= retain_recent < clear_threshold")
            return
        raise ConfigError(f"unknown policy kind {self.kind!r}")

    def spec(self) -> str:
        return format_policy_spec(self)


@dataclass(frozen=True)
class PolicyState:
    """Per-episode state: the retained round indices (the trimmed context
    after the last completed round) plus accumulated summaries."""

    retained: tuple[int, ...] = ()
    summaries: tuple[str, ...] = ()


_POLICY_RE = re.compile(r"^(?:long|window-(\d+)|(clip|sum)-(\d+)to(\d+))$")


def parse_policy_spec(spec: str) -> PolicyConfig:
    """Parse "long" | "window-<W>" | "clip-<H>to<L>" | "sum-<H>to<L>"."""
    m = _POLICY_RE.match(spec.strip().lower())
    if not m:
        raise ConfigError(f"bad policy spec {spec!r}")
    if m.group(1) is not None:
        return PolicyConfig(KIND_WINDOW, window_size=int(m.group(1)))
    if m.group(2) is not None:
        kind = KIND_CLIP if m.group(2) == "clip" else KIND_SUMMARY
        return PolicyConfig(kind, clear_threshold=int(m.group(3)), retain_recent=int(m.group(4)))
    return PolicyConfig(KIND_LONG)


def format_policy_spec(cfg: PolicyConfig) -> str:
    if cfg.kind == KIND_LONG:
        return "long"
    if cfg.kind == KIND_WINDOW:
        return f"window-{cfg.window_size}"
    prefix = "clip" if cfg.kind == KIND_CLIP else "sum"
    return f"{prefix}-{cfg.clear_threshold}to{cfg.retain_recent}"


def _clip_step(retained: tuple[int, ...], t: int, threshold: int, keep: int) -> tuple[int, ...]:
    """One step of the trimming recurrence: the context visible at round t
    given the trimmed context after round t-1."""
    if len(retained) + 1 == threshold:
        return tuple(range(t - keep + 1, t + 1))  # empty when keep == 0
    return retained + (t,)


def visible_rounds(cfg: PolicyConfig, state: PolicyState, t: int) -> tuple[int, ...]:
    """Round indices visible while generating the action of round t.

    For clip/summary the clearing decision is part of visibility: when the
    retained context plus the current round would reach the threshold, only
    the most recent ``retain_recent`` rounds (current round included) are
    visible. Returned indices are sorted ascending.
    """
    if t < 1:
        raise ContractError("turn number must be >= 1")
    if cfg.kind == KIND_LONG:
        return tuple(range(1, t + 1))
    if cfg.kind == KIND_WINDOW:
        return tuple(range(max(1, t - cfg.window_size + 1), t + 1))
    return _clip_step(state.retained, t, cfg.clear_threshold, cfg.retain_recent)


def update_after_round(
    cfg: PolicyConfig,
    state: PolicyState,
    t: int,
    summarizer: "Summarizer | None" = None,
    conv: Conversation | None = None,
) -> PolicyState:
    """Fold completed round t into the policy state.

    Long and window policies are stateless. For clip/summary the retained
    set becomes the trimmed context after round t. When a summary-policy
    clearing fires, the summarizer compresses the entire pre-clear context
    (the previously retained rounds plus round t) into one text appended
    to the summary list.
    """
    if cfg.kind in (KIND_LONG, KIND_WINDOW):
        return state
    cleared = len(state.retained) + 1 == cfg.clear_threshold
    retained = _clip_step(state.retained, t, cfg.clear_threshold, cfg.retain_recent)
    if cfg.kind == KIND_CLIP or not cleared:
        return replace(state, retained=retained)
    if summarizer is None:
        raise ConfigError("summary policy requires a summarizer")
    if conv is None:
        raise ContractError("summary policy requires the conversation to summarize")
    rounds = [conv.round(i) for i in state.retained + (t,)]
    summary = summarizer.summarize(rounds)
    return PolicyState(retained=retained, summaries=state.summaries + (summary,))


def build_mask(
    cfg: PolicyConfig,
    state: PolicyState,
    t: int,
    conv: Conversation | None = None,
) -> list[bool]:
    """Boolean visibility vector over rounds 1..t (system prompt and goal
    are never masked and carry no entry)."""
    if conv is not None and conv.n_rounds < t:
        raise ContractError(f"conversation has {conv.n_rounds} rounds, need {t}")
    vis = set(visible_rounds(cfg, state, t))
    return [i in vis for i in range(1, t + 1)]


class Summarizer(Protocol):
    """Compresses a block of rounds into one summary text."""

    def summarize(self, rounds: Sequence[Round]) -> str: ...


@dataclass(frozen=True)
class TruncatingSummarizer:
    """Deterministic model-free summarizer for tests and offline runs:
    concatenates round actions and truncates."""

    max_chars: int = 240

    def summarize(self, rounds: Sequence[Round]) -> str:
        if not rounds:
            return "(nothing to summarize)"
        lo, hi = rounds[0].index, rounds[-1].index
        acts = ", ".join(r.action or "?" for r in rounds)
        return f"Rounds {lo}-{hi}: actions were {acts}"[: self.max_chars]
