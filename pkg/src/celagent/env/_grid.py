from __future__ import annotations

Pos = tuple[int, int]

# canonical order for movement actions
DIRECTIONS: dict[str, Pos] = {
    "Up": (-1, 0),
    "Down": (1, 0),
    "Left": (0, -1),
    "Right": (0, 1),
}

_BY_LOWER = {name.lower(): name for name in DIRECTIONS}


def parse_direction(text: str) -> str | None:
    word = text.strip().strip("\"'`.[]()").strip().lower()
    return _BY_LOWER.get(word)


def shift(pos: Pos, direction: str) -> Pos:
    dr, dc = DIRECTIONS[direction]
    return (pos[0] + dr, pos[1] + dc)


def header(cols: int, w: int) -> str:
    return " " * w + " " + " ".join(str(c).rjust(w) for c in range(cols))


def grid_lines(text: str) -> list[list[str]]:
    """Cell tokens of a rendered grid, dropping the header, row labels and legend."""
    rows = []
    for line in text.splitlines()[1:]:
        if line.startswith("Legend"):
            break
        rows.append(line.split()[1:])
    return rows
