"""Forward-pass attention export with exact token-role span accounting.

Transcripts are line-delimited JSON, one message per line with fields
{role, tag, content, round_index} (round_index 0 for the system prompt
and goal). Each message is serialized as "<role>: <content>\\n" and
tokenized on its own, so every token is attributable to exactly one
message; the first three tokens of the sequence are relabeled as the
sink category. One record is emitted per assistant response, covering
the prefix of the conversation up to and including that response.

Container format per record: <name>.json metadata
{n_tokens, spans: [{start, end, category, round_index}], dtype: "f32",
matrix_file} plus a sibling <name>.bin of row-major little-endian
float32 attention weights (head-averaged, one layer).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import torch

SINK_TOKENS = 3

TAG_CATEGORY = {
    "system_prompt": "system",
    "goal": "user",
    "observation_header": "user",
    "observation_body": "user",
    "summary": "user",
    "action": "assistant",  # split into prev/cur per record
}


class SpanAlignmentError(RuntimeError):
    """Token spans could not be aligned with the transcript."""


@dataclass(frozen=True)
class ExtractionJob:
    checkpoint: str
    transcript: str
    out_dir: str
    layer: str | int = "last"
    device: str = "cpu"


@dataclass(frozen=True)
class TranscriptMessage:
    role: str
    tag: str
    content: str
    round_index: int


def read_transcript(path: str) -> list[TranscriptMessage]:
    messages = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                messages.append(
                    TranscriptMessage(
                        role=rec["role"],
                        tag=rec["tag"],
                        content=rec["content"],
                        round_index=int(rec["round_index"]),
                    )
                )
            except (ValueError, KeyError) as exc:
                raise SpanAlignmentError(f"bad transcript line {line_no}: {exc}") from exc
    if not messages or messages[0].tag != "system_prompt":
        raise SpanAlignmentError("transcript must start with a system prompt message")
    return messages


def render_message(msg: TranscriptMessage) -> str:
    return f"{msg.role}: {msg.content}\n"


def tokenize_messages(tokenizer, messages: list[TranscriptMessage]):
    """Per-message token ids; every message must own at least one token."""
    ids_per_message = []
    for i, msg in enumerate(messages):
        ids = tokenizer(render_message(msg), add_special_tokens=False)["input_ids"]
        if not ids:
            raise SpanAlignmentError(f"message {i} ({msg.tag}) tokenized to zero tokens")
        ids_per_message.append(ids)
    return ids_per_message


def build_spans(messages: list[TranscriptMessage], ids_per_message, cur_index: int):
    """Token-role spans for the prefix ending at message ``cur_index``.

    Assistant messages before the current one map to prev_assistant; the
    sink category claims the first three tokens of the sequence.
    """
    spans = []
    cursor = 0
    for i in range(cur_index + 1):
        msg = messages[i]
        length = len(ids_per_message[i])
        category = TAG_CATEGORY.get(msg.tag)
        if category is None:
            raise SpanAlignmentError(f"unknown message tag {msg.tag!r}")
        if category == "assistant":
            category = "cur_assistant" if i == cur_index else "prev_assistant"
        spans.append(
            {"start": cursor, "end": cursor + length,
             "category": category, "round_index": msg.round_index}
        )
        cursor += length
    total = cursor
    if total < SINK_TOKENS + 1:
        raise SpanAlignmentError("sequence too short to carve out sink tokens")
    carved = [{"start": 0, "end": SINK_TOKENS, "category": "sink", "round_index": 0}]
    for span in spans:
        start = max(span["start"], SINK_TOKENS)
        if span["end"] > start:
            carved.append({**span, "start": start})
    if carved[-1]["end"] != total or any(
        a["end"] != b["start"] for a, b in zip(carved, carved[1:])
    ):
        raise SpanAlignmentError("spans do not partition the token sequence")
    return carved, total


def _select_layer(attentions, layer: str | int) -> int:
    n_layers = len(attentions)
    if layer == "last":
        return n_layers - 1
    index = int(layer)
    if not -n_layers <= index < n_layers:
        raise SpanAlignmentError(f"layer {index} outside 0..{n_layers - 1}")
    return index % n_layers


def extract(job: ExtractionJob) -> list[str]:
    """Emit one record per assistant response; returns metadata paths."""
    from transformers import AutoModelForCausalLM, AutoTokenizer

    messages = read_transcript(job.transcript)
    tokenizer = AutoTokenizer.from_pretrained(job.checkpoint)
    model = AutoModelForCausalLM.from_pretrained(
        job.checkpoint, attn_implementation="eager"
    )
    model.to(job.device)
    model.eval()

    ids_per_message = tokenize_messages(tokenizer, messages)
    os.makedirs(job.out_dir, exist_ok=True)
    written = []
    response_no = 0
    for cur_index, msg in enumerate(messages):
        if msg.tag != "action":
            continue
        response_no += 1
        spans, total = build_spans(messages, ids_per_message, cur_index)
        flat_ids = [t for ids in ids_per_message[: cur_index + 1] for t in ids]
        if len(flat_ids) != total:
            raise SpanAlignmentError("token count drifted from span accounting")
        max_positions = getattr(model.config, "max_position_embeddings", None) or getattr(
            model.config, "n_positions", None
        )
        if max_positions is not None and total > max_positions:
            raise SpanAlignmentError(
                f"sequence of {total} tokens exceeds model positions {max_positions}"
            )
        with torch.no_grad():
            output = model(
                torch.tensor([flat_ids], device=job.device), output_attentions=True
            )
        layer_index = _select_layer(output.attentions, job.layer)
        matrix = output.attentions[layer_index][0].mean(dim=0)  # head average
        array = matrix.to(torch.float32).cpu().numpy()
        base = os.path.join(job.out_dir, f"record_{response_no:03d}")
        with open(base + ".bin", "wb") as fh:
            fh.write(np.ascontiguousarray(array, dtype="<f4").tobytes())
        meta = {
            "n_tokens": total,
            "spans": spans,
            "dtype": "f32",
            "matrix_file": os.path.basename(base) + ".bin",
        }
        with open(base + ".json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=1)
        written.append(base + ".json")
    if not written:
        raise SpanAlignmentError("transcript has no assistant responses")
    return written
