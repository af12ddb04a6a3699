"""Attention-ratio analytics over exported attention records.

A record is one generation step's head-averaged final-layer attention
matrix plus token-role spans (sink = first 3 tokens, system, user,
previous-assistant, current-assistant). Category ratios sum each output
token's attention mass per category and average over output tokens; the
diagonal ratio measures mass landing near offset-matched positions of
previous assistant responses, the round-level signature of imitation.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from inertia.errors import ContractError

CATEGORY_SINK = "sink"
CATEGORY_SYSTEM = "system"
CATEGORY_USER = "user"
CATEGORY_PREV_ASSISTANT = "prev_assistant"
CATEGORY_CUR_ASSISTANT = "cur_assistant"
CATEGORIES = (
    CATEGORY_SINK,
    CATEGORY_SYSTEM,
    CATEGORY_USER,
    CATEGORY_PREV_ASSISTANT,
    CATEGORY_CUR_ASSISTANT,
)

SINK_TOKENS = 3
DEFAULT_BAND_RADIUS = 5


@dataclass(frozen=True)
class Span:
    start: int
    end: int  # exclusive
    category: str
    round_index: int = 0

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ContractError(f"unknown span category {self.category!r}")
        if not 0 <= self.start < self.end:
            raise ContractError(f"bad span bounds [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class AttentionRecord:
    matrix: np.ndarray
    spans: tuple[Span, ...]

    @property
    def n_tokens(self) -> int:
        return int(self.matrix.shape[0])

    def spans_of(self, category: str) -> list[Span]:
        return [s for s in self.spans if s.category == category]

    def output_span(self) -> Span:
        cur = self.spans_of(CATEGORY_CUR_ASSISTANT)
        if not cur:
            raise ContractError("record has no current-assistant span")
        return cur[-1]

    def validate(self) -> list[str]:
        """Structural checks; returns human-readable warnings."""
        warnings = []
        n = self.n_tokens
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            warnings.append(f"matrix shape {self.matrix.shape} is not square")
            return warnings
        covered = sorted(self.spans, key=lambda s: s.start)
        cursor = 0
        for span in covered:
            if span.start != cursor:
                warnings.append(f"spans do not partition tokens at {span.start}")
                break
            cursor = span.end
        else:
            if cursor != n:
                warnings.append(f"spans cover {cursor} of {n} tokens")
        sink = self.spans_of(CATEGORY_SINK)
        if n >= SINK_TOKENS and (
            len(sink) != 1 or sink[0].start != 0 or sink[0].end != SINK_TOKENS
        ):
            warnings.append("sink span must be exactly tokens [0, 3)")
        if np.any(np.triu(self.matrix, k=1) != 0):
            warnings.append("matrix has attention above the diagonal (non-causal)")
        row_sums = self.matrix.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-3):
            warnings.append("row sums deviate from 1 by more than 1e-3")
        return warnings


@dataclass(frozen=True)
class RatioReport:
    """Mean attention mass per category plus the diagonal-inertia ratio."""

    sink: float
    system: float
    user: float
    prev_assistant: float
    cur_assistant: float
    diagonal_ratio: float
    n_output_tokens: int

    def category(self, name: str) -> float:
        return getattr(self, name)


def category_ratios(rec: AttentionRecord, output_span: Span | None = None) -> dict[str, float]:
    """Per-category attention mass averaged over the output tokens."""
    out = output_span or rec.output_span()
    if out.length <= 0:
        raise ContractError("empty output span")
    rows = rec.matrix[out.start : out.end]
    totals = {name: np.zeros(out.length) for name in CATEGORIES}
    for span in rec.spans:
        totals[span.category] += rows[:, span.start : span.end].sum(axis=1)
    return {name: float(vals.mean()) for name, vals in totals.items()}


def diagonal_ratio(
    rec: AttentionRecord,
    output_span: Span | None = None,
    band_radius: int = DEFAULT_BAND_RADIUS,
) -> float:
    """Mean attention from output token at in-response offset i to tokens
    at offsets j of each previous assistant response with |j - i| <= r.

    Offsets count from the start of each response; positions past the end
    of a shorter previous response contribute nothing. Returns 0 when no
    previous assistant span exists.
    """
    if band_radius < 0:
        raise ContractError("band radius must be >= 0")
    out = output_span or rec.output_span()
    prev_spans = rec.spans_of(CATEGORY_PREV_ASSISTANT)
    if not prev_spans:
        return 0.0
    per_token = np.zeros(out.length)
    for k in range(out.length):
        row = rec.matrix[out.start + k]
        for span in prev_spans:
            lo = max(0, k - band_radius)
            hi = min(span.length, k + band_radius + 1)
            if lo < hi:
                per_token[k] += row[span.start + lo : span.start + hi].sum()
    return float(per_token.mean())


def report(rec: AttentionRecord, band_radius: int = DEFAULT_BAND_RADIUS) -> RatioReport:
    out = rec.output_span()
    cats = category_ratios(rec, out)
    return RatioReport(
        sink=cats[CATEGORY_SINK],
        system=cats[CATEGORY_SYSTEM],
        user=cats[CATEGORY_USER],
        prev_assistant=cats[CATEGORY_PREV_ASSISTANT],
        cur_assistant=cats[CATEGORY_CUR_ASSISTANT],
        diagonal_ratio=diagonal_ratio(rec, out, band_radius),
        n_output_tokens=out.length,
    )


def trend_curve(
    records: Sequence[AttentionRecord], band_radius: int = DEFAULT_BAND_RADIUS
) -> list[tuple[int, RatioReport]]:
    """Per-turn ratio series for one conversation's generation steps."""
    turns = [rec.output_span().round_index for rec in records]
    if any(b <= a for a, b in zip(turns, turns[1:])):
        raise ContractError("records must be ordered by strictly increasing turn")
    return [(turn, report(rec, band_radius)) for turn, rec in zip(turns, records)]


# -- container format ---------------------------------------------------------

def write_record(rec: AttentionRecord, path_base: str) -> str:
    """Write <base>.json metadata plus <base>.bin row-major little-endian
    float32 matrix; returns the metadata path."""
    meta_path = path_base + ".json"
    bin_path = path_base + ".bin"
    with open(bin_path, "wb") as fh:
        fh.write(np.ascontiguousarray(rec.matrix, dtype="<f4").tobytes())
    meta = {
        "n_tokens": rec.n_tokens,
        "spans": [
            {"start": s.start, "end": s.end, "category": s.category, "round_index": s.round_index}
            for s in rec.spans
        ],
        "dtype": "f32",
        "matrix_file": os.path.basename(bin_path),
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)
    return meta_path


def read_record(meta_path: str) -> tuple[AttentionRecord, list[str]]:
    """Load a record; returns (record, validation warnings)."""
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("dtype") != "f32":
        raise ContractError(f"unsupported dtype {meta.get('dtype')!r}")
    n = int(meta["n_tokens"])
    bin_path = os.path.join(os.path.dirname(meta_path) or ".", meta["matrix_file"])
    raw = np.fromfile(bin_path, dtype="<f4")
    if raw.size != n * n:
        raise ContractError(f"matrix file holds {raw.size} floats, expected {n * n}")
    matrix = raw.reshape(n, n).astype(np.float64)
    spans = tuple(
        Span(int(s["start"]), int(s["end"]), s["category"], int(s.get("round_index", 0)))
        for s in meta["spans"]
    )
    rec = AttentionRecord(matrix=matrix, spans=spans)
    return rec, rec.validate()


# -- synthetic generators (tests, demos, trend suite) -------------------------

def _normalize_causal(matrix: np.ndarray) -> np.ndarray:
    n = matrix.shape[0]
    matrix = np.tril(np.abs(matrix))
    matrix[0, 0] = max(matrix[0, 0], 1.0)
    sums = matrix.sum(axis=1, keepdims=True)
    sums[sums == 0] = 1.0
    return matrix / sums


def conversation_spans(
    system_tokens: int, round_lengths: Sequence[tuple[int, int]]
) -> tuple[Span, ...]:
    """Span layout for a conversation: sink, system, then per round a user
    block and an assistant block; the last assistant block is the current
    response. round_lengths holds (user_len, assistant_len) pairs."""
    if system_tokens < SINK_TOKENS + 1:
        raise ContractError("system block must extend past the sink tokens")
    spans = [Span(0, SINK_TOKENS, CATEGORY_SINK), Span(SINK_TOKENS, system_tokens, CATEGORY_SYSTEM)]
    cursor = system_tokens
    n_rounds = len(round_lengths)
    for i, (user_len, asst_len) in enumerate(round_lengths, start=1):
        spans.append(Span(cursor, cursor + user_len, CATEGORY_USER, round_index=i))
        cursor += user_len
        category = CATEGORY_CUR_ASSISTANT if i == n_rounds else CATEGORY_PREV_ASSISTANT
        spans.append(Span(cursor, cursor + asst_len, category, round_index=i))
        cursor += asst_len
    return tuple(spans)


def random_record(rng: np.random.Generator, max_tokens: int = 128) -> AttentionRecord:
    """Random causal row-stochastic record with 1-3 completed rounds."""
    n_rounds = int(rng.integers(1, 4)) + 1
    system_tokens = int(rng.integers(SINK_TOKENS + 1, 10))
    lengths = [
        (int(rng.integers(2, 8)), int(rng.integers(2, 8))) for _ in range(n_rounds)
    ]
    total = system_tokens + sum(u + a for u, a in lengths)
    if total > max_tokens:
        lengths = lengths[:1]
        total = system_tokens + sum(u + a for u, a in lengths)
    spans = conversation_spans(system_tokens, lengths)
    matrix = _normalize_causal(rng.random((total, total)))
    return AttentionRecord(matrix=matrix, spans=spans)


def copy_pattern_record(
    rng: np.random.Generator,
    copy_strength: float,
    n_prev_rounds: int,
    response_len: int = 8,
    system_tokens: int = 6,
    turn: int | None = None,
) -> AttentionRecord:
    """Record whose output tokens put ``copy_strength`` of their mass on the
    offset-matched token of each previous response: a synthetic stand-in
    for strongly inertial generation."""
    if not 0 <= copy_strength <= 1:
        raise ContractError("copy_strength must be in [0, 1]")
    lengths = [(4, response_len) for _ in range(n_prev_rounds + 1)]
    spans = conversation_spans(system_tokens, lengths)
    total = spans[-1].end
    matrix = _normalize_causal(rng.random((total, total)) * 0.1)
    out = spans[-1]
    prev = [s for s in spans if s.category == CATEGORY_PREV_ASSISTANT]
    for k in range(out.length):
        row_idx = out.start + k
        base = matrix[row_idx, : row_idx + 1]
        base /= base.sum()
        row = np.zeros(total)
        row[: row_idx + 1] = base * (1.0 - copy_strength)
        if prev:
            share = copy_strength / len(prev)
            for span in prev:
                row[span.start + min(k, span.length - 1)] += share
        else:
            row[: row_idx + 1] += base * copy_strength
        matrix[row_idx] = row
    if turn is not None:
        spans = tuple(
            Span(s.start, s.end, s.category, turn if s is spans[-1] else s.round_index)
            for s in spans
        )
    rec = AttentionRecord(matrix=matrix, spans=spans)
    return rec
