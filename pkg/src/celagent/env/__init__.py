from .core import (
    DEFAULT_STEP_LIMITS,
    Action,
    DiscontinuousTrajectory,
    EnvError,
    EpisodeOutcome,
    GameId,
    GameState,
    GenerationFailure,
    IllegalAction,
    StepRecord,
    TerminalState,
    TerminationReason,
    Trajectory,
    Transition,
    append_step,
    end_episode,
    from_board,
    game_module,
    legal_actions,
    make_action,
    parse_action,
    reset,
    step,
)
from .frozen_lake import FrozenLakeBoard, generate_frozenlake, move_frozenlake
from .minesweeper import AlreadyRevealed, MinesweeperBoard, generate_minesweeper, reveal
from .sokoban import SokobanBoard, generate_sokoban, move_sokoban


_RENDERERS = {MinesweeperBoard: GameId.MINESWEEPER, FrozenLakeBoard: GameId.FROZEN_LAKE, SokobanBoard: GameId.SOKOBAN}


def render(state_or_board) -> str:
    """Observation text for a state or a bare board."""
    if isinstance(state_or_board, GameState):
        return state_or_board.observation_text
    game = _RENDERERS.get(type(state_or_board))
    if game is None:
        raise TypeError(f"cannot render {type(state_or_board).__name__}")
    return game_module(game).render(state_or_board)
