"""Grid maze navigation with binary success reward.

Layouts are perfect mazes carved by a seeded recursive backtracker on a
configurable grid (default 10x10). The agent moves one cell per step in
four directions; observations report position, goal, and adjacent walls.
A partially observable variant reports only the outcome of the last move.
"""

from __future__ import annotations

import random
from collections import deque

from inertia.envs.base import EnvSpec, InvalidAction, StepResult, TERM_GOAL, TextEnv

DIRECTIONS = {
    "up": (-1, 0),
    "down": (1, 0),
    "left": (0, -1),
    "right": (0, 1),
}


def carve_maze(height: int, width: int, rng: random.Random) -> dict:
    """Recursive-backtracker perfect maze: cell -> set of open neighbours."""
    passages: dict[tuple[int, int], set] = {
        (r, c): set() for r in range(height) for c in range(width)
    }
    start = (0, 0)
    stack = [start]
    seen = {start}
    while stack:
        cell = stack[-1]
        r, c = cell
        nexts = [
            (r + dr, c + dc)
            for dr, dc in DIRECTIONS.values()
            if (r + dr, c + dc) in passages and (r + dr, c + dc) not in seen
        ]
        if not nexts:
            stack.pop()
            continue
        chosen = rng.choice(sorted(nexts))
        passages[cell].add(chosen)
        passages[chosen].add(cell)
        seen.add(chosen)
        stack.append(chosen)
    return passages


def bfs_distances(passages: dict, source: tuple[int, int]) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        cell = queue.popleft()
        for nxt in passages[cell]:
            if nxt not in dist:
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    return dist


def render_observation(passages: dict, pos: tuple[int, int], goal: tuple[int, int]) -> str:
    """Observation text for an arbitrary maze state (also used to
    synthesize consistent warm-up transcripts)."""
    walls = ", ".join(
        sorted(
            name
            for name, (dr, dc) in DIRECTIONS.items()
            if (pos[0] + dr, pos[1] + dc) not in passages[pos]
        )
    ) or "none"
    return (
        f"Current position: {pos}\n"
        f"Goal position: {goal}\n"
        f"Walls adjacent: {walls}"
    )


class MazeEnv(TextEnv):
    env_id = "maze"
    default_max_steps = 60

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        self.size = int(spec.knobs.get("size", 10))
        self.partial = bool(int(spec.knobs.get("partial", 0)))
        self.passages = carve_maze(self.size, self.size, self._rng)
        cells = sorted(self.passages)
        self.pos = self._rng.choice(cells)
        # keep the solution nontrivial but well inside the step budget
        dist_from_start = bfs_distances(self.passages, self.pos)
        far = [c for c in cells if self.size <= dist_from_start[c] <= 2 * self.size]
        self.goal = self._rng.choice(sorted(far) or [c for c in cells if c != self.pos])
        self.dist_to_goal = bfs_distances(self.passages, self.goal)
        self._last_note = "You are in a maze."

    @property
    def instructions(self) -> str:
        return (
            "You are navigating a maze on a grid. Cells are (row, col) with "
            "(0, 0) at the top-left. Each step, answer with exactly one move: "
            "up, down, left, or right. Moving into a wall wastes the step."
        )

    @property
    def goal_text(self) -> str:
        return f"Reach the goal cell at {self.goal}."

    def _walls_here(self) -> list[str]:
        r, c = self.pos
        return [
            name
            for name, (dr, dc) in DIRECTIONS.items()
            if (r + dr, c + dc) not in self.passages[self.pos]
        ]

    def _render(self) -> str:
        if self.partial:
            return self._last_note
        return render_observation(self.passages, self.pos, self.goal)

    def _initial_observation(self) -> str:
        return self._render()

    def _apply(self, action: str) -> StepResult:
        word = action.strip().strip("[]").lower()
        if word not in DIRECTIONS:
            raise InvalidAction("choose one of: up, down, left, right")
        dr, dc = DIRECTIONS[word]
        target = (self.pos[0] + dr, self.pos[1] + dc)
        if target in self.passages[self.pos]:
            self.pos = target
            self._last_note = f"Moved {word}."
        else:
            self._last_note = f"Bumped into a wall moving {word}."
        if self.pos == self.goal:
            return StepResult(
                observation=f"{self._last_note}\nYou reached the goal!",
                reward=1.0,
                done=True,
                termination=TERM_GOAL,
            )
        return StepResult(observation=self._render())

    def _partial_reward(self) -> float:
        return 0.0  # success metric is binary

    def optimal_hint(self) -> str | None:
        if self.pos == self.goal:
            return None
        here = self.dist_to_goal.get(self.pos)
        if here is None:
            return None
        for name, (dr, dc) in sorted(DIRECTIONS.items()):
            nxt = (self.pos[0] + dr, self.pos[1] + dc)
            if nxt in self.passages[self.pos] and self.dist_to_goal[nxt] == here - 1:
                return name
        return None

    def heuristic_action(self, rng: random.Random) -> str:
        open_dirs = [
            name
            for name, (dr, dc) in sorted(DIRECTIONS.items())
            if (self.pos[0] + dr, self.pos[1] + dc) in self.passages[self.pos]
        ]
        return rng.choice(open_dirs or sorted(DIRECTIONS))

    def random_action(self, rng: random.Random) -> str:
        return rng.choice(sorted(DIRECTIONS))
