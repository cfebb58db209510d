"""Deterministic (non-slippery) Frozen Lake."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

from ..rng import SeededRng
from ._grid import DIRECTIONS, Pos, grid_lines, header, parse_direction, shift
from .core import GenerationFailure

SIZE, HOLES = 6, 6
MAX_GENERATION_ATTEMPTS = 1000


@dataclass(frozen=True)
class FrozenLakeBoard:
    rows: int
    cols: int
    holes: frozenset[Pos]
    start: Pos
    goal: Pos
    agent: Pos

    @property
    def hole_mask(self):
        import numpy as np

        mask = np.zeros((self.rows, self.cols), dtype=bool)
        for cell in self.holes:
            mask[cell] = True
        return mask

    def inside(self, pos: Pos) -> bool:
        return 0 <= pos[0] < self.rows and 0 <= pos[1] < self.cols


def _goal_reachable(board: FrozenLakeBoard) -> bool:
    seen = {board.start}
    frontier = deque([board.start])
    while frontier:
        pos = frontier.popleft()
        if pos == board.goal:
            return True
        for d in DIRECTIONS:
            nxt = shift(pos, d)
            if board.inside(nxt) and nxt not in board.holes and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return False


def generate(rng: SeededRng, size: int = SIZE, holes: int = HOLES) -> FrozenLakeBoard:
    start, goal = (0, 0), (size - 1, size - 1)
    free = [(r, c) for r in range(size) for c in range(size) if (r, c) not in (start, goal)]
    for _ in range(MAX_GENERATION_ATTEMPTS):
        board = FrozenLakeBoard(size, size, frozenset(rng.sample(free, holes)), start, goal, start)
        if _goal_reachable(board):
            return board
    raise GenerationFailure(f"no solvable {size}x{size} lake with {holes} holes after {MAX_GENERATION_ATTEMPTS} draws")


def generate_frozenlake(seed: int, **options) -> FrozenLakeBoard:
    from .core import _GAME_STREAMS, GameId

    return generate(SeededRng(seed, _GAME_STREAMS[GameId.FROZEN_LAKE]), **options)


def status(board: FrozenLakeBoard) -> str:
    if board.agent in board.holes:
        return "lost"
    if board.agent == board.goal:
        return "won"
    return "ongoing"


def move_frozenlake(board: FrozenLakeBoard, direction: str) -> tuple[FrozenLakeBoard, bool]:
    """One cell in ``direction``; moving off the grid leaves the agent in place."""
    nxt = shift(board.agent, direction)
    if not board.inside(nxt):
        nxt = board.agent
    new = replace(board, agent=nxt)
    return new, status(new) != "ongoing"


def actions(board: FrozenLakeBoard) -> list[str]:
    return list(DIRECTIONS)


def apply(board: FrozenLakeBoard, direction: str) -> FrozenLakeBoard:
    return move_frozenlake(board, direction)[0]


def format_action(direction: str) -> str:
    return direction


def parse_action(text: str) -> str | None:
    return parse_direction(text)


LEGEND = "Legend: P=player  X=player in hole  +=player on goal  S=start  G=goal  O=hole  .=ice"


def render(board: FrozenLakeBoard) -> str:
    w = len(str(max(board.rows, board.cols) - 1))
    lines = [header(board.cols, w)]
    for r in range(board.rows):
        cells = []
        for c in range(board.cols):
            pos = (r, c)
            if pos == board.agent:
                ch = "X" if pos in board.holes else "+" if pos == board.goal else "P"
            elif pos in board.holes:
                ch = "O"
            elif pos == board.goal:
                ch = "G"
            elif pos == board.start:
                ch = "S"
            else:
                ch = "."
            cells.append(ch.rjust(w))
        lines.append(str(r).rjust(w) + " " + " ".join(cells))
    lines.append(LEGEND)
    return "\n".join(lines) + "\n"


def parse_render(text: str) -> FrozenLakeBoard:
    """Rebuild a board from its rendering."""
    cells = grid_lines(text)
    holes, agent, goal, start = set(), None, None, None
    for r, row in enumerate(cells):
        for c, ch in enumerate(row):
            if ch == "O":
                holes.add((r, c))
            elif ch == "P":
                agent = (r, c)
            elif ch == "X":
                agent = (r, c)
                holes.add((r, c))
            elif ch == "+":
                agent = goal = (r, c)
            elif ch == "G":
                goal = (r, c)
            elif ch == "S":
                start = (r, c)
    if agent is None or goal is None:
        raise ValueError("rendering lacks a player or a goal")
    return FrozenLakeBoard(len(cells), len(cells[0]), frozenset(holes), start or agent, goal, agent)
