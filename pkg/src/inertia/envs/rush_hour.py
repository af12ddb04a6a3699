"""Rush Hour sliding-block puzzle on a 6x6 board.

Puzzles are generated backward: vehicles are placed around the red car X
parked at the exit, then the board is scrambled by random legal moves, so
every puzzle is solvable in at most the scramble depth. Moves are
"[<id><dir>]" where dir '+' slides right/down and '-' slides left/up, one
cell per step. Reaching the exit pays 1.0; otherwise the terminal reward
is the relative progress of X toward the exit.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from inertia.envs.base import (
    EnvSpec,
    InvalidAction,
    StepResult,
    TERM_GOAL,
    TextEnv,
)
from inertia.errors import ConfigError

BOARD = 6
EXIT_ROW = 2
SCRAMBLE_DEPTHS = {"easy": 6, "medium": 12, "hard": 20}


@dataclass(frozen=True)
class Vehicle:
    vid: str
    row: int
    col: int
    length: int
    horizontal: bool

    def cells(self) -> list[tuple[int, int]]:
        if self.horizontal:
            return [(self.row, self.col + i) for i in range(self.length)]
        return [(self.row + i, self.col) for i in range(self.length)]

    def moved(self, delta: int) -> "Vehicle":
        if self.horizontal:
            return Vehicle(self.vid, self.row, self.col + delta, self.length, True)
        return Vehicle(self.vid, self.row + delta, self.col, self.length, False)


State = tuple[Vehicle, ...]


def occupied(state: State) -> dict:
    cells = {}
    for veh in state:
        for cell in veh.cells():
            cells[cell] = veh.vid
    return cells


def legal_moves(state: State) -> list[tuple[str, int]]:
    """All (vehicle id, +1/-1) single-cell slides legal in this state."""
    taken = occupied(state)
    moves = []
    for veh in state:
        for delta in (1, -1):
            moved = veh.moved(delta)
            ok = True
            for cell in moved.cells():
                if not (0 <= cell[0] < BOARD and 0 <= cell[1] < BOARD):
                    ok = False
                    break
                if taken.get(cell, veh.vid) != veh.vid:
                    ok = False
                    break
            if ok:
                moves.append((veh.vid, delta))
    return moves


def apply_state_move(state: State, vid: str, delta: int) -> State:
    return tuple(v.moved(delta) if v.vid == vid else v for v in state)


def red_car(state: State) -> Vehicle:
    return next(v for v in state if v.vid == "X")


def exit_distance(state: State) -> int:
    """Cells between X's front bumper and the exit column."""
    x = red_car(state)
    return (BOARD - 1) - (x.col + x.length - 1)


def solve(state: State, max_depth: int | None = None) -> list[tuple[str, int]] | None:
    """BFS shortest move sequence driving X to the exit; None if not
    solvable (within max_depth when given)."""
    def key(s: State):
        return tuple((v.vid, v.row, v.col) for v in s)

    start = state
    if exit_distance(start) == 0:
        return []
    seen = {key(start)}
    queue = deque([(start, [])])
    while queue:
        current, path = queue.popleft()
        if max_depth is not None and len(path) >= max_depth:
            continue
        for vid, delta in legal_moves(current):
            nxt = apply_state_move(current, vid, delta)
            k = key(nxt)
            if k in seen:
                continue
            seen.add(k)
            new_path = path + [(vid, delta)]
            if exit_distance(nxt) == 0:
                return new_path
            queue.append((nxt, new_path))
    return None


def generate_puzzle(rng: random.Random, n_vehicles: int, scramble: int) -> State:
    """Backward generation: solved board, random extra vehicles, then
    ``scramble`` random legal moves. Retries scrambles that leave X at the
    exit so episodes never start solved."""
    if scramble < 1:
        raise ConfigError("scramble depth must be >= 1")
    for _attempt in range(100):
        vehicles = [Vehicle("X", EXIT_ROW, BOARD - 2, 2, True)]
        taken = set(vehicles[0].cells())
        ids = iter("ABCDEFGHIJKLMNOPQRSTUVW")
        placed = 0
        for _try in range(300):
            if placed >= n_vehicles:
                break
            length = 2 if rng.random() < 0.7 else 3
            horizontal = rng.random() < 0.5
            row = rng.randrange(BOARD - (0 if horizontal else length - 1))
            col = rng.randrange(BOARD - (length - 1 if horizontal else 0))
            cand = Vehicle("?", row, col, length, horizontal)
            cells = cand.cells()
            if any(cell in taken for cell in cells):
                continue
            vid = next(ids)
            vehicles.append(Vehicle(vid, row, col, length, horizontal))
            taken.update(cells)
            placed += 1
        state: State = tuple(vehicles)
        last: tuple[str, int] | None = None
        for _ in range(scramble):
            moves = legal_moves(state)
            if last is not None:
                undo = (last[0], -last[1])
                non_undo = [m for m in moves if m != undo]
                moves = non_undo or moves
            if not moves:
                break
            vid, delta = rng.choice(moves)
            state = apply_state_move(state, vid, delta)
            last = (vid, delta)
        if exit_distance(state) >= 1:
            return state
    return state


class RushHourEnv(TextEnv):
    env_id = "rushhour"
    default_max_steps = 50

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        difficulty = str(spec.knobs.get("difficulty", "medium")).lower()
        if difficulty not in SCRAMBLE_DEPTHS:
            raise ConfigError(f"difficulty must be one of {sorted(SCRAMBLE_DEPTHS)}")
        self.scramble_depth = int(spec.knobs.get("scramble", SCRAMBLE_DEPTHS[difficulty]))
        n_vehicles = int(spec.knobs.get("vehicles", 5))
        self.state = generate_puzzle(self._rng, n_vehicles, self.scramble_depth)
        self.d_initial = max(exit_distance(self.state), 1)

    @property
    def instructions(self) -> str:
        return (
            "You are solving a Rush Hour puzzle on a 6x6 board. Vehicles are "
            "letters; X is the red car, which exits to the right on its row. "
            "Vehicles slide one cell along their orientation per move: '+' is "
            "right (horizontal) or down (vertical), '-' is left or up. Answer "
            "with exactly one move in brackets, e.g. [A+] or [X-]."
        )

    @property
    def goal_text(self) -> str:
        return "Slide the red car X to the exit on the right edge."

    def _render(self) -> str:
        grid = [["." for _ in range(BOARD)] for _ in range(BOARD)]
        for veh in self.state:
            for r, c in veh.cells():
                grid[r][c] = veh.vid
        rows = [
            " ".join(grid[r]) + (" => EXIT" if r == EXIT_ROW else "")
            for r in range(BOARD)
        ]
        return "Board:\n" + "\n".join(rows)

    def _initial_observation(self) -> str:
        return self._render()

    def _apply(self, action: str) -> StepResult:
        token = action.strip().strip("[]").replace(" ", "").upper()
        if len(token) != 2 or token[0] not in occupied(self.state).values() or token[1] not in "+-":
            raise InvalidAction("answer with [<vehicle><+/->], e.g. [X+]")
        vid, delta = token[0], 1 if token[1] == "+" else -1
        if (vid, delta) not in legal_moves(self.state):
            return StepResult(observation=f"{vid} cannot move that way.\n" + self._render())
        self.state = apply_state_move(self.state, vid, delta)
        if exit_distance(self.state) == 0:
            return StepResult(
                observation="The red car reached the exit!",
                reward=1.0,
                done=True,
                termination=TERM_GOAL,
            )
        return StepResult(observation=self._render())

    def _partial_reward(self) -> float:
        progress = 1.0 - exit_distance(self.state) / self.d_initial
        return min(1.0, max(0.0, progress))

    def optimal_hint(self) -> str | None:
        solution = solve(self.state)
        if not solution:
            return None
        vid, delta = solution[0]
        return f"[{vid}{'+' if delta > 0 else '-'}]"

    def heuristic_action(self, rng: random.Random) -> str:
        hint = self.optimal_hint()
        if hint:
            return hint
        return self.random_action(rng)

    def random_action(self, rng: random.Random) -> str:
        moves = legal_moves(self.state)
        if not moves:
            return "[X+]"
        vid, delta = rng.choice(moves)
        return f"[{vid}{'+' if delta > 0 else '-'}]"
