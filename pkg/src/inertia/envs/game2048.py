"""Text 2048 on a 4x4 board.

Standard merge rules: one compacting pass per move, each tile merges at
most once, a move that changes nothing is rejected. Reaching the target
tile pays 1.0; otherwise the terminal reward blends score progress and
how far up the tile ladder the board got.
"""

from __future__ import annotations

import math
import random

from inertia.envs.base import (
    EnvSpec,
    InvalidAction,
    StepResult,
    TERM_FAILURE,
    TERM_GOAL,
    TextEnv,
)
from inertia.errors import ConfigError

SIZE = 4
MOVES = ("up", "down", "left", "right")


def merge_row_left(row: list[int]) -> tuple[list[int], int]:
    """Slide one row left, merging equal neighbours once each.

    Returns (new row, score gained).
    """
    tiles = [v for v in row if v]
    out: list[int] = []
    gained = 0
    i = 0
    while i < len(tiles):
        if i + 1 < len(tiles) and tiles[i] == tiles[i + 1]:
            out.append(tiles[i] * 2)
            gained += tiles[i] * 2
            i += 2
        else:
            out.append(tiles[i])
            i += 1
    return out + [0] * (len(row) - len(out)), gained


def apply_move(board: list[list[int]], direction: str) -> tuple[list[list[int]], int, bool]:
    """Apply a move to a square board; returns (board, score, changed)."""

    def rows_of(b):
        if direction == "left":
            return [list(r) for r in b]
        if direction == "right":
            return [list(reversed(r)) for r in b]
        if direction == "up":
            return [list(col) for col in zip(*b)]
        return [list(reversed(col)) for col in zip(*b)]

    def unrows(rows):
        if direction == "left":
            return rows
        if direction == "right":
            return [list(reversed(r)) for r in rows]
        if direction == "up":
            return [list(r) for r in zip(*rows)]
        return [list(r) for r in zip(*[list(reversed(r)) for r in rows])]

    merged = []
    gained = 0
    for row in rows_of(board):
        new_row, g = merge_row_left(row)
        merged.append(new_row)
        gained += g
    result = unrows(merged)
    return result, gained, result != board


def target_score(target: int) -> int:
    """Score accumulated building the target tile purely from spawned 2s:
    every intermediate doubling of a 2^k tile adds 2^k to the score."""
    return target * (int(math.log2(target)) - 1)


class Game2048Env(TextEnv):
    env_id = "2048"
    default_max_steps = 60

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        self.target = int(spec.knobs.get("target", 2048))
        if self.target < 4 or self.target & (self.target - 1):
            raise ConfigError("target must be a power of two >= 4")
        self.board = [[0] * SIZE for _ in range(SIZE)]
        self.score = 0
        self._spawn()
        self._spawn()

    def _spawn(self) -> None:
        empty = [(r, c) for r in range(SIZE) for c in range(SIZE) if not self.board[r][c]]
        if empty:
            r, c = self._rng.choice(empty)
            self.board[r][c] = 2 if self._rng.random() < 0.9 else 4

    @property
    def instructions(self) -> str:
        return (
            "You are playing 2048 on a 4x4 board. A move slides all tiles in "
            "one direction; equal neighbours merge into their sum (each tile "
            "merges at most once per move) and a new tile appears. A move "
            f"that changes nothing is invalid. Reach a {self.target} tile. "
            "Each step, answer with exactly one move in brackets: "
            "[up], [down], [left], or [right]."
        )

    @property
    def goal_text(self) -> str:
        return f"Merge tiles to build a {self.target} tile."

    def _max_tile(self) -> int:
        return max(max(row) for row in self.board)

    def _render(self) -> str:
        rows = [
            " ".join(f"{v or '.':>5}" for v in row)
            for row in self.board
        ]
        return "Board:\n" + "\n".join(rows) + f"\nScore: {self.score}"

    def _initial_observation(self) -> str:
        return self._render()

    def _legal_moves(self) -> list[str]:
        return [m for m in MOVES if apply_move(self.board, m)[2]]

    def _apply(self, action: str) -> StepResult:
        word = action.strip().strip("[]").lower()
        if word not in MOVES:
            raise InvalidAction("choose one of: [up], [down], [left], [right]")
        new_board, gained, changed = apply_move(self.board, word)
        if not changed:
            raise InvalidAction(f"[{word}] does not change the board")
        self.board = new_board
        self.score += gained
        self._spawn()
        if self._max_tile() >= self.target:
            return StepResult(
                observation=self._render() + "\nTarget tile reached!",
                reward=1.0,
                done=True,
                termination=TERM_GOAL,
            )
        if not self._legal_moves():
            return StepResult(
                observation=self._render() + "\nNo moves left.",
                reward=self._partial_reward(),
                done=True,
                termination=TERM_FAILURE,
            )
        return StepResult(observation=self._render())

    def _partial_reward(self) -> float:
        score_part = min(self.score / target_score(self.target), 1.0)
        ladder_part = math.log2(max(self._max_tile(), 2)) / math.log2(self.target)
        return min(1.0, max(0.0, 0.5 * score_part + 0.5 * ladder_part))

    def heuristic_action(self, rng: random.Random) -> str:
        legal = self._legal_moves()
        for preferred in ("left", "down", "right", "up"):
            if preferred in legal:
                return f"[{preferred}]"
        return f"[{rng.choice(MOVES)}]"

    def random_action(self, rng: random.Random) -> str:
        return f"[{rng.choice(MOVES)}]"
