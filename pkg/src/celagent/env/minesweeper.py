"""Minesweeper: reveal-only, no flags, no first-click protection."""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from ..rng import SeededRng
from .core import EnvError

Cell = tuple[int, int]

ROWS, COLS, MINES = 5, 5, 3

_CELL_RE = re.compile(r"(\d+)\s*,\s*(\d+)")


class AlreadyRevealed(EnvError, ValueError):
    pass


def _adjacency(rows: int, cols: int, mines: frozenset[Cell]) -> tuple[tuple[int, ...], ...]:
    grid = np.zeros((rows + 2, cols + 2), dtype=np.int8)
    for r, c in mines:
        grid[r + 1, c + 1] = 1
    counts = sum(
        grid[1 + dr : rows + 1 + dr, 1 + dc : cols + 1 + dc]
        for dr in (-1, 0, 1)
        for dc in (-1, 0, 1)
        if dr or dc
    )
    return tuple(tuple(int(v) for v in row) for row in counts)


@dataclass(frozen=True)
class MinesweeperBoard:
    rows: int
    cols: int
    mines: frozenset[Cell]
    revealed: frozenset[Cell] = frozenset()
    exploded: Cell | None = None
    adjacency: tuple[tuple[int, ...], ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.adjacency:
            object.__setattr__(self, "adjacency", _adjacency(self.rows, self.cols, self.mines))

    @classmethod
    def from_mines(cls, mines, rows: int = ROWS, cols: int = COLS) -> "MinesweeperBoard":
        return cls(rows, cols, frozenset(tuple(m) for m in mines))

    @property
    def mine_mask(self) -> np.ndarray:
        mask = np.zeros((self.rows, self.cols), dtype=bool)
        for cell in self.mines:
            mask[cell] = True
        return mask

    @property
    def revealed_mask(self) -> np.ndarray:
        mask = np.zeros((self.rows, self.cols), dtype=bool)
        for cell in self.revealed:
            mask[cell] = True
        return mask

    @property
    def safe_cells(self) -> int:
        return self.rows * self.cols - len(self.mines)

    def neighbors(self, cell: Cell):
        r, c = cell
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if (dr or dc) and 0 <= r + dr < self.rows and 0 <= c + dc < self.cols:
                    yield (r + dr, c + dc)


def generate(rng: SeededRng, rows: int = ROWS, cols: int = COLS, mines: int = MINES) -> MinesweeperBoard:
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    return MinesweeperBoard(rows, cols, frozenset(rng.sample(cells, mines)))


def generate_minesweeper(seed: int, **options) -> MinesweeperBoard:
    """Same board as ``reset("minesweeper", seed)`` produces."""
    from .core import _GAME_STREAMS, GameId

    return generate(SeededRng(seed, _GAME_STREAMS[GameId.MINESWEEPER]), **options)


def status(board: MinesweeperBoard) -> str:
    if board.exploded is not None:
        return "lost"
    if len(board.revealed) == board.safe_cells:
        return "won"
    return "ongoing"


def reveal(board: MinesweeperBoard, cell: Cell) -> tuple[MinesweeperBoard, bool]:
    """Open ``cell``; zero cells cascade over their 8-connected zero region and its border."""
    cell = tuple(cell)
    if not (0 <= cell[0] < board.rows and 0 <= cell[1] < board.cols):
        raise ValueError(f"cell {cell} is off the board")
    if cell in board.revealed:
        raise AlreadyRevealed(f"cell {cell} is already revealed")
    if cell in board.mines:
        new = replace(board, revealed=board.revealed | {cell}, exploded=cell)
        return new, True
    opened = set(board.revealed)
    opened.add(cell)
    queue = deque([cell])
    while queue:
        cur = queue.popleft()
        if board.adjacency[cur[0]][cur[1]] != 0:
            continue
        for nb in board.neighbors(cur):
            if nb not in opened and nb not in board.mines:
                opened.add(nb)
                queue.append(nb)
    new = replace(board, revealed=frozenset(opened))
    return new, status(new) != "ongoing"


def actions(board: MinesweeperBoard) -> list[Cell]:
    return [
        (r, c)
        for r in range(board.rows)
        for c in range(board.cols)
        if (r, c) not in board.revealed
    ]


def apply(board: MinesweeperBoard, cell: Cell) -> MinesweeperBoard:
    return reveal(board, cell)[0]


def format_action(cell: Cell) -> str:
    return f"({cell[0]}, {cell[1]})"


def parse_action(text: str) -> Cell | None:
    m = _CELL_RE.search(text)
    if m is None:
        return None
    return (int(m.group(1)), int(m.group(2)))


LEGEND = "Legend: .=hidden  0-8=revealed number  *=mine"


def render(board: MinesweeperBoard) -> str:
    w = len(str(max(board.rows, board.cols) - 1))
    lines = [" " * w + " " + " ".join(str(c).rjust(w) for c in range(board.cols))]
    for r in range(board.rows):
        cells = []
        for c in range(board.cols):
            if (r, c) not in board.revealed:
                ch = "."
            elif (r, c) in board.mines:
                ch = "*"
            else:
                ch = str(board.adjacency[r][c])
            cells.append(ch.rjust(w))
        lines.append(str(r).rjust(w) + " " + " ".join(cells))
    lines.append(LEGEND)
    return "\n".join(lines) + "\n"
