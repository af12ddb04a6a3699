"""Multi-turn conversation model and prompt assembly.

A conversation is [system, goal, round 1, round 2, ...] where every round
is one observation/action exchange. Observations are split into a fixed
header message ("Observation:\\n") followed by the observation body; the
split gives downstream analytics clean token-role boundaries and
measurably helps models parse the turn structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from inertia.errors import ContractError

ROLE_SYSTEM = "system"
ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"

TAG_SYSTEM_PROMPT = "system_prompt"
TAG_GOAL = "goal"
TAG_OBSERVATION_HEADER = "observation_header"
TAG_OBSERVATION_BODY = "observation_body"
TAG_ACTION = "action"
TAG_SUMMARY = "summary"

OBSERVATION_HEADER_TEXT = "Observation:\n"

_TAG_TO_ROLE = {
    TAG_SYSTEM_PROMPT: ROLE_SYSTEM,
    TAG_GOAL: ROLE_USER,
    TAG_OBSERVATION_HEADER: ROLE_USER,
    TAG_OBSERVATION_BODY: ROLE_USER,
    TAG_ACTION: ROLE_ASSISTANT,
    TAG_SUMMARY: ROLE_USER,
}


@dataclass(frozen=True)
class Message:
    """One chat message with a semantic tag for analytics."""

    role: str
    content: str
    tag: str

    def __post_init__(self) -> None:
        if self.tag not in _TAG_TO_ROLE:
            raise ContractError(f"unknown message tag {self.tag!r}")
        if self.role != _TAG_TO_ROLE[self.tag]:
            raise ContractError(
                f"tag {self.tag!r} requires role {_TAG_TO_ROLE[self.tag]!r}, got {self.role!r}"
            )
        if self.tag == TAG_OBSERVATION_HEADER and self.content != OBSERVATION_HEADER_TEXT:
            raise ContractError("observation header content must be exactly 'Observation:\\n'")

    def as_chat_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class Round:
    """One observation/action exchange. ``action`` is None while the
    assistant turn is still being generated (only the last round of a
    conversation may be open)."""

    index: int
    observation: str
    action: str | None = None

    @property
    def completed(self) -> bool:
        return self.action is not None

    @property
    def user_messages(self) -> tuple[Message, Message]:
        return (
            Message(ROLE_USER, OBSERVATION_HEADER_TEXT, TAG_OBSERVATION_HEADER),
            Message(ROLE_USER, self.observation, TAG_OBSERVATION_BODY),
        )

    @property
    def assistant_message(self) -> Message | None:
        if self.action is None:
            return None
        return Message(ROLE_ASSISTANT, self.action, TAG_ACTION)


@dataclass(frozen=True)
class Conversation:
    """Immutable conversation; all mutators return a new value."""

    system_prompt: Message
    goal: Message
    rounds: tuple[Round, ...] = ()

    @classmethod
    def new(cls, system_text: str, goal_text: str) -> "Conversation":
        return cls(
            system_prompt=Message(ROLE_SYSTEM, system_text, TAG_SYSTEM_PROMPT),
            goal=Message(ROLE_USER, goal_text, TAG_GOAL),
        )

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def has_open_round(self) -> bool:
        return bool(self.rounds) and not self.rounds[-1].completed

    def round(self, index: int) -> Round:
        if not 1 <= index <= len(self.rounds):
            raise ContractError(f"round index {index} outside 1..{len(self.rounds)}")
        return self.rounds[index - 1]

    def begin_round(self, observation: str) -> "Conversation":
        """Open round n+1 with its observation; the action comes later."""
        if self.has_open_round:
            raise ContractError("cannot begin a round while another is open")
        new = Round(index=len(self.rounds) + 1, observation=observation)
        return Conversation(self.system_prompt, self.goal, self.rounds + (new,))

    def complete_round(self, action: str) -> "Conversation":
        if not action:
            raise ContractError("action must be nonempty")
        if not self.has_open_round:
            raise ContractError("no open round to complete")
        done = Round(self.rounds[-1].index, self.rounds[-1].observation, action)
        return Conversation(self.system_prompt, self.goal, self.rounds[:-1] + (done,))

    def append_round(self, observation: str, action: str) -> "Conversation":
        """Append a completed observation/action round."""
        return self.begin_round(observation).complete_round(action)


def assemble_prompt(
    conv: Conversation,
    visible: Iterable[int],
    summaries: Sequence[str] = (),
) -> list[Message]:
    """Serialize the visible part of a conversation into a chat prompt.

    Emits [system, goal, (summary block), then for each visible round in
    index order its observation header, body, and action]. The final round
    always contributes its user messages even when not in ``visible`` (the
    agent needs the current observation to act on); an open final round
    contributes no action message. Summaries, when present, become a
    single user message before the first round, oldest summary first.
    """
    visible_set = set(visible)
    unknown = visible_set - set(range(1, conv.n_rounds + 1))
    if unknown:
        raise ContractError(f"unknown round indices {sorted(unknown)}")
    if conv.rounds:
        visible_set.add(conv.rounds[-1].index)

    messages = [conv.system_prompt, conv.goal]
    if summaries:
        messages.append(Message(ROLE_USER, "\n".join(summaries), TAG_SUMMARY))
    for rnd in conv.rounds:
        if rnd.index not in visible_set:
            continue
        messages.extend(rnd.user_messages)
        if rnd.assistant_message is not None:
            messages.append(rnd.assistant_message)
    return messages


def assemble_from_mask(
    conv: Conversation,
    mask: Sequence[bool],
    summaries: Sequence[str] = (),
) -> list[Message]:
    """Mask view of assembly: ``mask[i]`` covers round i+1 of the full
    history. Equivalent to trimming by construction of the visible set."""
    if len(mask) != conv.n_rounds:
        raise ContractError(f"mask length {len(mask)} != round count {conv.n_rounds}")
    visible = [i + 1 for i, keep in enumerate(mask) if keep]
    return assemble_prompt(conv, visible, summaries)


def transcript_lines(conv: Conversation) -> list[str]:
    """Line-delimited JSON transcript, one object per message.

    round_index is 0 for the system prompt and goal.
    """
    records = [
        {"role": conv.system_prompt.role, "tag": conv.system_prompt.tag,
         "content": conv.system_prompt.content, "round_index": 0},
        {"role": conv.goal.role, "tag": conv.goal.tag,
         "content": conv.goal.content, "round_index": 0},
    ]
    for rnd in conv.rounds:
        for msg in rnd.user_messages:
            records.append({"role": msg.role, "tag": msg.tag,
                            "content": msg.content, "round_index": rnd.index})
        if rnd.assistant_message is not None:
            msg = rnd.assistant_message
            records.append({"role": msg.role, "tag": msg.tag,
                            "content": msg.content, "round_index": rnd.index})
    return [json.dumps(rec, ensure_ascii=False) for rec in records]


def write_transcript(conv: Conversation, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in transcript_lines(conv):
            fh.write(line + "\n")


def read_transcript(path) -> Conversation:
    """Rebuild a conversation from a transcript file."""
    with open(path, encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    if len(records) < 2 or records[0]["tag"] != TAG_SYSTEM_PROMPT or records[1]["tag"] != TAG_GOAL:
        raise ContractError("transcript must start with system prompt and goal")
    conv = Conversation.new(records[0]["content"], records[1]["content"])
    pending_obs: str | None = None
    for rec in records[2:]:
        tag = rec["tag"]
        if tag == TAG_OBSERVATION_HEADER:
            continue
        if tag == TAG_OBSERVATION_BODY:
            if pending_obs is not None:
                conv = conv.begin_round(pending_obs)
            pending_obs = rec["content"]
        elif tag == TAG_ACTION:
            if pending_obs is None:
                raise ContractError("action message without a preceding observation")
            conv = conv.append_round(pending_obs, rec["content"])
            pending_obs = None
        else:
            raise ContractError(f"unexpected tag {tag!r} inside round stream")
    if pending_obs is not None:
        conv = conv.begin_round(pending_obs)
    return conv
