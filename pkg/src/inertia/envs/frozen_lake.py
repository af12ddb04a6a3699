"""Deterministic frozen-lake grid: reach G, avoid holes.

The board is rendered as text each turn (P player, G goal, H hole,
'.' frozen). All moves execute exactly as commanded; walking off the
edge wastes the step. Falling into a hole or running out of steps pays
a partial reward based on BFS progress toward the goal:
``clamp(1 - d_final / d_initial, 0, 1)``.
"""

from __future__ import annotations

import random
from collections import deque

from inertia.envs.base import (
    EnvSpec,
    InvalidAction,
    StepResult,
    TERM_FAILURE,
    TERM_GOAL,
    TextEnv,
)

MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}


def lake_bfs_distance(holes: frozenset, size: int, source: tuple, target: tuple) -> float:
    """Shortest path length over non-hole cells; the source itself may be a
    hole (distance measured as if standing on it). inf when unreachable."""
    if source == target:
        return 0
    dist = {source: 0}
    queue = deque([source])
    while queue:
        r, c = queue.popleft()
        for dr, dc in MOVES.values():
            nxt = (r + dr, c + dc)
            if not (0 <= nxt[0] < size and 0 <= nxt[1] < size):
                continue
            if nxt in holes or nxt in dist:
                continue
            dist[nxt] = dist[(r, c)] + 1
            queue.append(nxt)
            if nxt == target:
                return dist[nxt]
    return float("inf")


def progress_reward(d_initial: float, d_final: float) -> float:
    """1 at the goal, 0 for no progress, linear in BFS distance between."""
    if d_final == 0:
        return 1.0
    if d_initial <= 0 or d_initial == float("inf") or d_final == float("inf"):
        return 0.0
    return min(1.0, max(0.0, 1.0 - d_final / d_initial))


class FrozenLakeEnv(TextEnv):
    env_id = "frozenlake"
    default_max_steps = 40

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        self.size = int(spec.knobs.get("size", 6))
        hole_rate = float(spec.knobs.get("holes", 0.2))
        corners = [(0, 0), (0, self.size - 1), (self.size - 1, 0), (self.size - 1, self.size - 1)]
        self.start = self._rng.choice(corners)
        self.goal = (self.size - 1 - self.start[0], self.size - 1 - self.start[1])
        # draw boards until the goal is reachable; the rng stream keeps this
        # a pure function of the seed
        for _ in range(200):
            holes = frozenset(
                (r, c)
                for r in range(self.size)
                for c in range(self.size)
                if (r, c) not in (self.start, self.goal) and self._rng.random() < hole_rate
            )
            if lake_bfs_distance(holes, self.size, self.start, self.goal) != float("inf"):
                break
        self.holes = holes
        self.pos = self.start
        self.d_initial = lake_bfs_distance(self.holes, self.size, self.start, self.goal)

    @property
    def instructions(self) -> str:
        return (
            "You are crossing a frozen lake shown as a grid: P is you, G is "
            "the goal, H is a hole, '.' is safe ice. Moves are deterministic. "
            "Each step, answer with exactly one move: up, down, left, or right."
        )

    @property
    def goal_text(self) -> str:
        return "Reach the goal tile G without falling into a hole."

    def _render(self) -> str:
        rows = []
        for r in range(self.size):
            row = []
            for c in range(self.size):
                if (r, c) == self.pos:
                    row.append("P")
                elif (r, c) == self.goal:
                    row.append("G")
                elif (r, c) in self.holes:
                    row.append("H")
                else:
                    row.append(".")
            rows.append(" ".join(row))
        return "Board:\n" + "\n".join(rows)

    def _initial_observation(self) -> str:
        return self._render()

    def _apply(self, action: str) -> StepResult:
        word = action.strip().strip("[]").lower()
        if word not in MOVES:
            raise InvalidAction("choose one of: up, down, left, right")
        dr, dc = MOVES[word]
        nxt = (self.pos[0] + dr, self.pos[1] + dc)
        if not (0 <= nxt[0] < self.size and 0 <= nxt[1] < self.size):
            return StepResult(observation="You bumped into the edge.\n" + self._render())
        self.pos = nxt
        if self.pos == self.goal:
            return StepResult(
                observation="You reached the goal!",
                reward=1.0,
                done=True,
                termination=TERM_GOAL,
            )
        if self.pos in self.holes:
            return StepResult(
                observation="You fell into a hole.",
                reward=self._partial_reward(),
                done=True,
                termination=TERM_FAILURE,
            )
        return StepResult(observation=self._render())

    def _partial_reward(self) -> float:
        d_now = lake_bfs_distance(self.holes, self.size, self.pos, self.goal)
        return progress_reward(self.d_initial, d_now)

    def optimal_hint(self) -> str | None:
        if self.pos == self.goal or self.pos in self.holes:
            return None
        here = lake_bfs_distance(self.holes, self.size, self.pos, self.goal)
        if here == float("inf"):
            return None
        for name, (dr, dc) in sorted(MOVES.items()):
            nxt = (self.pos[0] + dr, self.pos[1] + dc)
            if not (0 <= nxt[0] < self.size and 0 <= nxt[1] < self.size) or nxt in self.holes:
                continue
            if lake_bfs_distance(self.holes, self.size, nxt, self.goal) == here - 1:
                return name
        return None

    def heuristic_action(self, rng: random.Random) -> str:
        # greedy toward the goal, avoiding holes when possible
        best, best_d = [], None
        for name, (dr, dc) in sorted(MOVES.items()):
            nxt = (self.pos[0] + dr, self.pos[1] + dc)
            if not (0 <= nxt[0] < self.size and 0 <= nxt[1] < self.size) or nxt in self.holes:
                continue
            d = abs(nxt[0] - self.goal[0]) + abs(nxt[1] - self.goal[1])
            if best_d is None or d < best_d:
                best, best_d = [name], d
            elif d == best_d:
                best.append(name)
        return rng.choice(best or sorted(MOVES))

    def random_action(self, rng: random.Random) -> str:
        return rng.choice(sorted(MOVES))
