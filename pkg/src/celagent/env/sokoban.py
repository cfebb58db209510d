"""Single-box Sokoban on a walled grid.  Push-only; deadlocks do not end the episode."""
from __future__ import annotations

from dataclasses import dataclass, replace

from ..rng import SeededRng
from ._grid import DIRECTIONS, Pos, grid_lines, header, parse_direction, shift
from .core import GenerationFailure

SIZE = 6
MAX_GENERATION_ATTEMPTS = 1000


@dataclass(frozen=True)
class SokobanBoard:
    rows: int
    cols: int
    walls: frozenset[Pos]
    player: Pos
    box: Pos
    goal: Pos


def border_walls(rows: int, cols: int) -> frozenset[Pos]:
    return frozenset(
        (r, c) for r in range(rows) for c in range(cols) if r in (0, rows - 1) or c in (0, cols - 1)
    )


def _push(board: SokobanBoard, player: Pos, box: Pos, direction: str) -> tuple[Pos, Pos]:
    nxt = shift(player, direction)
    if nxt in board.walls:
        return player, box
    if nxt == box:
        beyond = shift(box, direction)
        if beyond in board.walls:
            return player, box
        return nxt, beyond
    return nxt, box


def _solvable(board: SokobanBoard) -> bool:
    start = (board.player, board.box)
    seen = {start}
    stack = [start]
    while stack:
        player, box = stack.pop()
        if box == board.goal:
            return True
        for d in DIRECTIONS:
            nxt = _push(board, player, box, d)
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def generate(rng: SeededRng, size: int = SIZE) -> SokobanBoard:
    walls = border_walls(size, size)
    interior = [(r, c) for r in range(1, size - 1) for c in range(1, size - 1)]
    for _ in range(MAX_GENERATION_ATTEMPTS):
        player, box, goal = rng.sample(interior, 3)
        board = SokobanBoard(size, size, walls, player, box, goal)
        if _solvable(board):
            return board
    raise GenerationFailure(f"no solvable {size}x{size} Sokoban after {MAX_GENERATION_ATTEMPTS} draws")


def generate_sokoban(seed: int, **options) -> SokobanBoard:
    from .core import _GAME_STREAMS, GameId

    return generate(SeededRng(seed, _GAME_STREAMS[GameId.SOKOBAN]), **options)


def status(board: SokobanBoard) -> str:
    return "won" if board.box == board.goal else "ongoing"


def move_sokoban(board: SokobanBoard, direction: str) -> tuple[SokobanBoard, bool]:
    """Walk or push the box one cell; blocked moves leave the board unchanged."""
    player, box = _push(board, board.player, board.box, direction)
    new = replace(board, player=player, box=box)
    return new, status(new) != "ongoing"


def actions(board: SokobanBoard) -> list[str]:
    return list(DIRECTIONS)


def apply(board: SokobanBoard, direction: str) -> SokobanBoard:
    return move_sokoban(board, direction)[0]


def format_action(direction: str) -> str:
    return direction


def parse_action(text: str) -> str | None:
    return parse_direction(text)


LEGEND = "Legend: #=wall  P=player  +=player on goal  B=box  *=box on goal  G=goal  .=floor"


def render(board: SokobanBoard) -> str:
    w = len(str(max(board.rows, board.cols) - 1))
    lines = [header(board.cols, w)]
    for r in range(board.rows):
        cells = []
        for c in range(board.cols):
            pos = (r, c)
            if pos in board.walls:
                ch = "#"
            elif pos == board.box:
                ch = "*" if pos == board.goal else "B"
            elif pos == board.player:
                ch = "+" if pos == board.goal else "P"
            elif pos == board.goal:
                ch = "G"
            else:
                ch = "."
            cells.append(ch.rjust(w))
        lines.append(str(r).rjust(w) + " " + " ".join(cells))
    lines.append(LEGEND)
    return "\n".join(lines) + "\n"


def parse_render(text: str) -> SokobanBoard:
    cells = grid_lines(text)
    walls, player, box, goal = set(), None, None, None
    for r, row in enumerate(cells):
        for c, ch in enumerate(row):
            if ch == "#":
                walls.add((r, c))
            elif ch == "P":
                player = (r, c)
            elif ch == "+":
                player = goal = (r, c)
            elif ch == "B":
                box = (r, c)
            elif ch == "*":
                box = goal = (r, c)
            elif ch == "G":
                goal = (r, c)
    if player is None or box is None:
        raise ValueError("rendering lacks a player or a box")
    if goal is None:
        raise ValueError("rendering lacks a goal")
    return SokobanBoard(len(cells), len(cells[0]), frozenset(walls), player, box, goal)
