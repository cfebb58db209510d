"""Brute-force solvers and scripted model backends.

Nothing here imports agent code: the scripted backends read prompts through
the public layout in :mod:`celagent.protocol` and answer in the tagged
grammar, so their answers travel through the same parser as a live model's.
"""
from __future__ import annotations

import threading
from collections import deque
from functools import lru_cache
from typing import Callable

from . import protocol as P
from .env import frozen_lake, minesweeper, sokoban
from .env._grid import DIRECTIONS, shift
from .env.core import GameId, GameState
from .gateway import ScriptedBackend
from .rng import SeededRng

PLACEHOLDER_RULES = "Oracle placeholder rules: the environment behaves as observed."
PLACEHOLDER_PLAYBOOK = "Oracle placeholder playbook: follow the plan that reaches the objective."


class ContractViolation(Exception):
    """A prompt handed to a scripted backend is missing required sections."""


def bfs_frozenlake(board: frozen_lake.FrozenLakeBoard) -> list[str] | None:
    """Shortest hole-free move sequence from the agent to the goal, or ``None``."""
    start = board.agent
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        pos = queue.popleft()
        if pos == board.goal:
            plan = []
            while parent[pos] is not None:
                pos, move = parent[pos]
                plan.append(move)
            return plan[::-1]
        for d in DIRECTIONS:
            nxt = shift(pos, d)
            if board.inside(nxt) and nxt not in board.holes and nxt not in parent:
                parent[nxt] = (pos, d)
                queue.append(nxt)
    return None


def bfs_sokoban(board: sokoban.SokobanBoard) -> list[str] | None:
    """Fewest-moves plan over (player, box) states; ``None`` when the box can never reach the goal."""
    walls = board.walls

    def move(player, box, d):
        nxt = shift(player, d)
        if nxt in walls:
            return player, box
        if nxt == box:
            beyond = shift(box, d)
            return (player, box) if beyond in walls else (nxt, beyond)
        return nxt, box

    start = (board.player, board.box)
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state[1] == board.goal:
            plan = []
            while parent[state] is not None:
                state, d = parent[state]
                plan.append(d)
            return plan[::-1]
        for d in DIRECTIONS:
            nxt = move(*state, d)
            if nxt not in parent:
                parent[nxt] = (state, d)
                queue.append(nxt)
    return None


def minesweeper_omniscient_policy(board: minesweeper.MinesweeperBoard) -> tuple[int, int] | None:
    """First unrevealed safe cell in row-major order."""
    for r in range(board.rows):
        for c in range(board.cols):
            if (r, c) not in board.revealed and (r, c) not in board.mines:
                return (r, c)
    return None


# -- oracles that read observations ---------------------------------------------------


class FrozenLakeOracle:
    game = GameId.FROZEN_LAKE

    @lru_cache(maxsize=4096)
    def next_action(self, observation: str) -> str | None:
        plan = bfs_frozenlake(frozen_lake.parse_render(observation))
        return plan[0] if plan else None

    def describe(self, observation: str, action: str) -> tuple[str, str]:
        board, _ = frozen_lake.move_frozenlake(frozen_lake.parse_render(observation), action)
        state = f"player at {board.agent}"
        result = frozen_lake.status(board)
        if result == "won":
            return state + " on the goal", "reward +1, game won"
        if result == "lost":
            return state + " in a hole", "reward 0, game lost"
        return state, "reward 0"


class SokobanOracle:
    game = GameId.SOKOBAN

    @lru_cache(maxsize=4096)
    def next_action(self, observation: str) -> str | None:
        plan = bfs_sokoban(sokoban.parse_render(observation))
        return plan[0] if plan else None

    def describe(self, observation: str, action: str) -> tuple[str, str]:
        board, done = sokoban.move_sokoban(sokoban.parse_render(observation), action)
        state = f"player at {board.player}, box at {board.box}"
        return (state + ", box on goal", "reward +1, game won") if done else (state, "reward 0")


class MinesweeperOmniscientOracle:
    """Knows the mine layout of the current episode via :meth:`observe`.

    The board is held per thread so concurrent runs can share one backend.
    """

    game = GameId.MINESWEEPER

    def __init__(self) -> None:
        self._local = threading.local()

    def observe(self, state: GameState) -> None:
        self._local.board = state.hidden

    def _board(self, observation: str) -> minesweeper.MinesweeperBoard:
        board = getattr(self._local, "board", None)
        if board is None or minesweeper.render(board) != observation:
            raise ContractViolation("omniscient oracle has no board matching the prompt's observation")
        return board

    def next_action(self, observation: str) -> str | None:
        cell = minesweeper_omniscient_policy(self._board(observation))
        return None if cell is None else minesweeper.format_action(cell)

    def describe(self, observation: str, action: str) -> tuple[str, str]:
        board = self._board(observation)
        cell = minesweeper.parse_action(action)
        if cell in board.mines:
            return f"cell {action} is a mine", "reward 0, game lost"
        new, done = minesweeper.reveal(board, cell)
        state = f"{len(new.revealed)} cells revealed"
        return (state + ", board cleared", "reward +1, game won") if done else (state, "reward 0")


def default_oracle(game: GameId | str):
    game = GameId(game)
    if game is GameId.FROZEN_LAKE:
        return FrozenLakeOracle()
    if game is GameId.SOKOBAN:
        return SokobanOracle()
    return MinesweeperOmniscientOracle()


def _require(sections: dict[str, str], names: tuple[str, ...], title: str) -> None:
    missing = [n for n in names if n not in sections]
    if missing:
        raise ContractViolation(f"{title!r} prompt lacks section(s): {', '.join(missing)}")


def scripted_cel_backend(game: GameId | str, oracle=None) -> ScriptedBackend:
    """Backend answering every prompt kind from an oracle.

    Decision and world-model answers give desirability 10 to the oracle's next
    action and 0 to every other action; reflection answers are fixed placeholders.
    """
    oracle = oracle or default_oracle(game)

    def handler(prompt: str) -> str:
        title = P.prompt_title(prompt)
        sec = P.split_sections(prompt)
        if title == P.TITLE_DECISION:
            _require(sec, (P.RULES, P.PLAYBOOK, P.OBSERVATION, P.CANDIDATES, P.OUTPUT), title)
            obs = sec[P.OBSERVATION] + "\n"
            best = oracle.next_action(obs)
            parts = ["Oracle lookahead.", P.format_value(10 if best else 0, "objective reachable")]
            for a in P.candidate_lines(sec[P.CANDIDATES]):
                s_hat, r_hat = oracle.describe(obs, a)
                parts.append(P.format_predict(a, 10 if a == best else 0, s_hat, r_hat))
            if best:
                parts.append(P.format_choose(best))
            return "\n".join(parts)
        if title == P.TITLE_WORLD_MODEL:
            _require(sec, (P.RULES, P.OBSERVATION, P.CONSIDERED, P.OUTPUT), title)
            if P.PLAYBOOK in sec:
                raise ContractViolation("world-model prompt must not carry the playbook")
            obs = sec[P.OBSERVATION] + "\n"
            action = sec[P.CONSIDERED].strip()
            s_hat, r_hat = oracle.describe(obs, action)
            score = 10 if action == oracle.next_action(obs) else 0
            return "Simulating the move.\n" + P.format_predict(action, score, s_hat, r_hat)
        if title == P.TITLE_ACTION_ONLY:
            _require(sec, (P.OBSERVATION, P.CANDIDATES, P.OUTPUT), title)
            best = oracle.next_action(sec[P.OBSERVATION] + "\n")
            return P.format_choose(best or "")
        if title == P.TITLE_RULES:
            _require(sec, (P.RULES, P.TRAJECTORIES, P.OUTPUT), title)
            return f"Reviewing the episodes.\n<rules>{PLACEHOLDER_RULES}</rules>"
        if title == P.TITLE_PLAYBOOK:
            _require(sec, (P.PLAYBOOK, P.TRAJECTORIES, P.OUTCOMES, P.OUTPUT), title)
            return f"Reviewing the outcomes.\n<playbook>{PLACEHOLDER_PLAYBOOK}</playbook>"
        if title == P.TITLE_REFLECTION:
            _require(sec, (P.RULES, P.PLAYBOOK, P.TRAJECTORIES, P.OUTCOMES, P.OUTPUT), title)
            return f"<rules>{PLACEHOLDER_RULES}</rules>\n<playbook>{PLACEHOLDER_PLAYBOOK}</playbook>"
        raise ContractViolation(f"unrecognised prompt title {title!r}")

    backend = ScriptedBackend(handler, backend_id=f"scripted:oracle:{GameId(game)}")
    backend.oracle = oracle
    return backend


def random_cel_backend(seed: int = 0, malformed_rate: float = 0.0) -> ScriptedBackend:
    """Well-formed answers with pseudo-random scores drawn in call order.

    With ``malformed_rate > 0`` a fraction of answers is corrupted (truncated
    tags, duplicated blocks, illegal actions) for robustness testing.  Output
    depends on call order, which makes it a useful subject for record/replay.
    """
    rng = SeededRng(seed, 0xC3)
    lock = threading.Lock()

    def corrupt(text: str) -> str:
        kind = rng.randbelow(5)
        if kind == 0:
            return text[: rng.randbelow(max(1, len(text)))]
        if kind == 1:
            return text + "\n" + text
        if kind == 2:
            return '<predict action="Nowhere" score=11>?</predict><choose>(99, 99)</choose>'
        if kind == 3:
            return text.replace("score=", "score=abc")
        return "I am not sure what to do."

    def handler(prompt: str) -> str:
        with lock:
            title = P.prompt_title(prompt)
            sec = P.split_sections(prompt)
            if title == P.TITLE_DECISION:
                acts = P.candidate_lines(sec.get(P.CANDIDATES, ""))
                out = [P.format_value(rng.randbelow(11), "uncertain position")]
                out += [P.format_predict(a, rng.randbelow(11), "unclear", "reward 0") for a in acts]
                if acts:
                    out.append(P.format_choose(rng.choice(acts)))
                text = "\n".join(out)
            elif title == P.TITLE_WORLD_MODEL:
                a = sec.get(P.CONSIDERED, "").strip()
                text = P.format_predict(a, rng.randbelow(11), "unclear", "reward 0")
            elif title == P.TITLE_ACTION_ONLY:
                acts = P.candidate_lines(sec.get(P.CANDIDATES, "")) or [""]
                text = P.format_choose(rng.choice(acts))
            elif title == P.TITLE_RULES:
                text = f"<rules>Rule draft #{rng.randbelow(1000)}.</rules>"
            else:
                text = f"<playbook>Strategy draft #{rng.randbelow(1000)}.</playbook>"
            if malformed_rate > 0 and rng.randbelow(10_000) < malformed_rate * 10_000:
                text = corrupt(text)
            return text

    return ScriptedBackend(handler, backend_id=f"scripted:random:{seed}")


SCRIPTED_BACKENDS: dict[str, Callable[..., ScriptedBackend]] = {
    "oracle": scripted_cel_backend,
    "random": random_cel_backend,
}
