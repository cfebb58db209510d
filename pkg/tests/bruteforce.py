"""Slow, obviously-correct reference implementations used only by the tests."""


def adjacency(rows, cols, mines):
    out = []
    for r in range(rows):
        row = []
        for c in range(cols):
            n = 0
            for rr in range(r - 1, r + 2):
                for cc in range(c - 1, c + 2):
                    if (rr, cc) != (r, c) and (rr, cc) in mines:
                        n += 1
            row.append(n)
        out.append(row)
    return out


def reveal_region(rows, cols, mines, cell):
    """Cells opened by clicking a safe ``cell`` on a fresh board, by fixed-point iteration."""
    counts = adjacency(rows, cols, mines)
    region = {cell}
    changed = True
    while changed:
        changed = False
        for r, c in list(region):
            if counts[r][c] != 0:
                continue
            for rr in range(max(0, r - 1), min(rows, r + 2)):
                for cc in range(max(0, c - 1), min(cols, c + 2)):
                    if (rr, cc) not in mines and (rr, cc) not in region:
                        region.add((rr, cc))
                        changed = True
    return region


def grid_reachable(rows, cols, blocked, start, goal):
    """Plain flood fill over 4-neighbours."""
    seen = {start}
    todo = [start]
    while todo:
        r, c = todo.pop()
        for nxt in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= nxt[0] < rows and 0 <= nxt[1] < cols and nxt not in blocked and nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return goal in seen


def replay_moves(game, seed, moves):
    """Final state after feeding ``moves`` to a fresh environment."""
    from celagent.env import legal_actions, reset, step

    state = reset(game, seed)
    for m in moves:
        (action,) = [a for a in legal_actions(state) if a.canonical_text == m]
        state = step(state, action).state_after
    return state
