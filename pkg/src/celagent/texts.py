"""Fixed texts shipped with the agent."""

BOOTSTRAP_PLAYBOOK = (
    "Play carefully and deliberately. Before each move, consider what you can observe "
    "and what each available action is likely to change. Prefer actions whose outcome "
    "you can predict with confidence, avoid moves that could end the game badly, and "
    "make steady progress toward finishing the game successfully."
)

NO_RULES_MARKER = "No rules learned yet."

# Reference rules for the zero-shot "with rules" baseline only; learning runs never see these.
GROUND_TRUTH_RULES = {
    "minesweeper": (
        "The board is a 5x5 grid hiding 3 mines. '.' is a hidden cell. Revealing a cell with "
        "action (row, col) shows a number: how many of its up to 8 neighbours hold mines. "
        "Revealing a 0 also reveals all connected 0 cells and their numbered border. Revealing "
        "a mine ('*') loses the game. You win when every non-mine cell is revealed."
    ),
    "frozen_lake": (
        "The board is a 6x6 grid. P is you, G is the goal, O is a hole, '.' and S are safe ice. "
        "Up/Down/Left/Right move exactly one cell; moving off the edge leaves you in place. "
        "Stepping onto a hole loses the game. Reaching G wins the game."
    ),
    "sokoban": (
        "The board is a 6x6 grid bordered by walls '#'. P is you, B is the single box, G is the "
        "goal. Up/Down/Left/Right move one cell; walls block movement. Walking into the box pushes "
        "it one cell if the cell behind it is free; boxes cannot be pulled. A box pushed into a "
        "corner away from the goal can never be recovered. You win when the box is on G."
    ),
}
