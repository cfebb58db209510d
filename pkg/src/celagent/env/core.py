"""Environment abstraction shared by the three grid games.

States are immutable values.  ``reset``/``step``/``legal_actions`` dispatch on
``GameId`` to the game modules, which only know about their own boards.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from types import ModuleType
from typing import Any

from ..rng import SeededRng


class EnvError(Exception):
    pass


class IllegalAction(EnvError, ValueError):
    """The action is not in ``legal_actions(state)``."""


class TerminalState(EnvError):
    """An operation that needs a live state received a terminal one."""


class DiscontinuousTrajectory(EnvError):
    pass


class GenerationFailure(EnvError, RuntimeError):
    """A generator exhausted its retry budget; the board parameters are unusable."""


class GameId(str, enum.Enum):
    MINESWEEPER = "minesweeper"
    FROZEN_LAKE = "frozen_lake"
    SOKOBAN = "sokoban"

    def __str__(self) -> str:
        return self.value


class TerminationReason(str, enum.Enum):
    OBJECTIVE_MET = "objective_met"
    FATAL_STATE = "fatal_state"
    STEP_LIMIT = "step_limit"
    PARSE_FALLBACK_LIMIT = "parse_fallback_limit"

    def __str__(self) -> str:
        return self.value


# Per-game defaults for episode length.
DEFAULT_STEP_LIMITS = {
    GameId.MINESWEEPER: 30,
    GameId.FROZEN_LAKE: 30,
    GameId.SOKOBAN: 50,
}

# Philox stream ids so equal seeds give unrelated layouts across games.
_GAME_STREAMS = {GameId.MINESWEEPER: 1, GameId.FROZEN_LAKE: 2, GameId.SOKOBAN: 3}


@dataclass(frozen=True)
class EpisodeOutcome:
    success: bool
    steps_taken: int
    termination_reason: TerminationReason
    return_value: float

    def __post_init__(self) -> None:
        if self.success != (self.termination_reason is TerminationReason.OBJECTIVE_MET):
            raise ValueError("success must coincide with termination_reason=objective_met")
        if self.return_value != (1 if self.success else 0):
            raise ValueError("sparse reward: return is 1 on success and 0 otherwise")

    def to_dict(self) -> dict[str, Any]:
        return {
            "success": self.success,
            "steps_taken": self.steps_taken,
            "termination_reason": self.termination_reason.value,
            "return_value": self.return_value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EpisodeOutcome":
        return cls(
            success=bool(d["success"]),
            steps_taken=int(d["steps_taken"]),
            termination_reason=TerminationReason(d["termination_reason"]),
            return_value=d["return_value"],
        )


@dataclass(frozen=True)
class Action:
    game: GameId
    payload: Any
    canonical_text: str

    def __str__(self) -> str:
        return self.canonical_text


@dataclass(frozen=True)
class GameState:
    game: GameId
    hidden: Any
    observation_text: str
    step_index: int = 0
    outcome: EpisodeOutcome | None = None

    @property
    def terminal(self) -> bool:
        return self.outcome is not None


@dataclass(frozen=True)
class Transition:
    state_before: GameState
    action: Action
    reward: int
    state_after: GameState


def game_module(game: GameId | str) -> ModuleType:
    from . import frozen_lake, minesweeper, sokoban

    return {
        GameId.MINESWEEPER: minesweeper,
        GameId.FROZEN_LAKE: frozen_lake,
        GameId.SOKOBAN: sokoban,
    }[GameId(game)]


def _make_state(game: GameId, board: Any, step_index: int) -> GameState:
    mod = game_module(game)
    status = mod.status(board)
    outcome = None
    if status == "won":
        outcome = EpisodeOutcome(True, step_index, TerminationReason.OBJECTIVE_MET, 1)
    elif status == "lost":
        outcome = EpisodeOutcome(False, step_index, TerminationReason.FATAL_STATE, 0)
    return GameState(game, board, mod.render(board), step_index, outcome)


def reset(game: GameId | str, seed: int, **options: Any) -> GameState:
    """Initial state for ``(game, seed)``; identical inputs give identical states."""
    game = GameId(game)
    rng = SeededRng(seed, _GAME_STREAMS[game])
    board = game_module(game).generate(rng, **options)
    return _make_state(game, board, 0)


def from_board(game: GameId | str, board: Any, step_index: int = 0) -> GameState:
    """Wrap a hand-built board (fixtures, oracles) in a state."""
    return _make_state(GameId(game), board, step_index)


def make_action(game: GameId | str, payload: Any) -> Action:
    game = GameId(game)
    return Action(game, payload, game_module(game).format_action(payload))


def parse_action(game: GameId | str, text: str) -> Action | None:
    """Parse agent text into an action of ``game``; ``None`` if unrecognisable."""
    game = GameId(game)
    payload = game_module(game).parse_action(text)
    if payload is None:
        return None
    return make_action(game, payload)


def legal_actions(state: GameState) -> list[Action]:
    if state.terminal:
        raise TerminalState(f"{state.game} state is terminal")
    return [make_action(state.game, p) for p in game_module(state.game).actions(state.hidden)]


def step(state: GameState, action: Action) -> Transition:
    if state.terminal:
        raise TerminalState(f"{state.game} state is terminal")
    if action.game is not state.game or action not in legal_actions(state):
        raise IllegalAction(f"{action.canonical_text!r} is not legal here")
    board = game_module(state.game).apply(state.hidden, action.payload)
    after = _make_state(state.game, board, state.step_index + 1)
    reward = 1 if after.outcome is not None and after.outcome.success else 0
    return Transition(state, action, reward, after)


def end_episode(state: GameState, reason: TerminationReason) -> GameState:
    """Force a failure terminal on a live state (step limit, fallback budget)."""
    if state.terminal:
        return state
    if reason in (TerminationReason.OBJECTIVE_MET, TerminationReason.FATAL_STATE):
        raise ValueError("only truncation reasons can end an episode externally")
    return replace(state, outcome=EpisodeOutcome(False, state.step_index, reason, 0))


@dataclass(frozen=True)
class StepRecord:
    observation: str
    action: str
    reward: int

    def to_dict(self) -> dict[str, Any]:
        return {"observation": self.observation, "action": self.action, "reward": self.reward}


@dataclass(frozen=True)
class Trajectory:
    """Ordered ``(s_t, a_t, r_{t+1})`` triples for one episode."""

    episode_index: int
    steps: tuple[StepRecord, ...] = ()
    terminal_observation: str | None = None
    last_state: GameState | None = field(default=None, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def total_reward(self) -> int:
        return sum(s.reward for s in self.steps)

    def to_dict(self) -> dict[str, Any]:
        return {
            "episode_index": self.episode_index,
            "steps": [s.to_dict() for s in self.steps],
            "terminal_observation": self.terminal_observation,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Trajectory":
        return cls(
            episode_index=int(d["episode_index"]),
            steps=tuple(StepRecord(s["observation"], s["action"], int(s["reward"])) for s in d["steps"]),
            terminal_observation=d.get("terminal_observation"),
        )


def append_step(trajectory: Trajectory, transition: Transition) -> Trajectory:
    before = transition.state_before
    if trajectory.last_state is None:
        ok = not trajectory.steps and before.step_index == 0
    else:
        ok = before == trajectory.last_state
    if not ok:
        raise DiscontinuousTrajectory(
            f"transition from step {before.step_index} does not continue a trajectory of length {len(trajectory)}"
        )
    record = StepRecord(before.observation_text, transition.action.canonical_text, transition.reward)
    return Trajectory(
        trajectory.episode_index,
        trajectory.steps + (record,),
        transition.state_after.observation_text,
        transition.state_after,
    )
