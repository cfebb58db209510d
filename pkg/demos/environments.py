"""Play each game by hand: one seeded board, its rendering, and a few steps."""
from celagent.env import legal_actions, reset, step


def show(game, seed, moves):
    state = reset(game, seed)
    print(f"== {game} seed {seed}")
    print(state.observation_text)
    for text in moves:
        (action,) = [a for a in legal_actions(state) if a.canonical_text == text]
        tr = step(state, action)
        state = tr.state_after
        print(f"\n-> {text}  reward={tr.reward}  terminal={state.terminal}")
        print(state.observation_text)
    print()


if __name__ == "__main__":
    show("minesweeper", 0, ["(4, 4)"])
    show("frozen_lake", 0, ["Down", "Down", "Right"])
    show("sokoban", 0, ["Left", "Left", "Left", "Down", "Right", "Right"])
