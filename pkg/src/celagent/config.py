"""Experiment configuration.

A config is a TOML or JSON file with these keys (defaults in brackets)::

    name = "minesweeper-full"       # run label; also namespaces replay sessions ["run"]
    game = "minesweeper"            # minesweeper | frozen_lake | sokoban
    seeds = [0, 1, 2]               # or: seeds = {start = 0, count = 32}
    trials_per_seed = 8             # independent trials, run concurrently [8]
    episodes_per_run = 32           # episodes per trial, cycling through seeds [len(seeds)]
    reflection_frequency = 5        # reflect after every 5th episode [5]
    max_steps_per_episode = 30      # [30 / 30 / 50 by game]
    ablation_mode = "full"          # full | no_rules | rules_once | action_only | zero_shot
    initial_knowledge = "ground_truth"  # or a path to an exported snapshot / store [none]
    gamma = 1.0                     # carried for completeness; returns are undiscounted [1.0]
    max_response_tokens = 8192      # [8192]
    temperature = 0.7               # [0.7]
    fallback_budget = 3             # consecutive fallback picks that end an episode [3]
    context_budget_chars = 48000    # hard cap on prompt size [48000]
    block_size = 5                  # episodes per success-rate point [reflection_frequency]
    rng_seed = 0                    # agent fallback randomness [0]
    workers = 1                     # concurrent trials [1]
    token_budget = 0                # per-run cap, 0 = none [0]

    [backend]
    mode = "live"                   # live | record | replay | scripted:oracle | scripted:random
    store = "cache/"                # replay store for record/replay
    inner = "live"                  # what `record` wraps [live]
    model = "qwen3-4b-instruct"     # else $CELAGENT_MODEL
    base_url = "http://localhost:8000/v1"  # else $CELAGENT_BASE_URL
    max_attempts = 4
    max_concurrency = 4

    [env_options]                   # generator overrides, e.g. size = 6
"""
from __future__ import annotations

import json
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .agent.core import Mode
from .env.core import DEFAULT_STEP_LIMITS, GameId

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass
class BackendConfig:
    mode: str = "live"
    store: str | None = None
    inner: str = "live"
    model: str | None = None
    base_url: str | None = None
    max_attempts: int = 4
    max_concurrency: int = 4


@dataclass
class RunConfig:
    game: GameId
    seeds: list[int]
    name: str = "run"
    trials_per_seed: int = 8
    episodes_per_run: int | None = None
    reflection_frequency: int = 5
    max_steps_per_episode: int | None = None
    ablation_mode: Mode = Mode.FULL
    initial_knowledge: str | None = None
    gamma: float = 1.0
    max_response_tokens: int = 8192
    temperature: float = 0.7
    fallback_budget: int = 3
    context_budget_chars: int = 48000
    block_size: int | None = None
    rng_seed: int = 0
    workers: int = 1
    token_budget: int = 0
    backend: BackendConfig = field(default_factory=BackendConfig)
    env_options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.game = GameId(self.game)
        self.ablation_mode = Mode(self.ablation_mode)
        if isinstance(self.backend, dict):
            self.backend = BackendConfig(**self.backend)
        self.seeds = [int(s) for s in self.seeds]
        if self.episodes_per_run is None:
            self.episodes_per_run = len(self.seeds)
        if self.max_steps_per_episode is None:
            self.max_steps_per_episode = DEFAULT_STEP_LIMITS[self.game]
        if self.block_size is None:
            self.block_size = self.reflection_frequency
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(f"{k}: {m}" for k, m in problems))

    def problems(self) -> list[tuple[str, str]]:
        out = []
        if not self.seeds:
            out.append(("seeds", "must be non-empty"))
        for key in ("trials_per_seed", "reflection_frequency", "episodes_per_run", "max_steps_per_episode",
                    "max_response_tokens", "fallback_budget", "block_size", "workers", "context_budget_chars"):
            if int(getattr(self, key)) < 1:
                out.append((key, "must be >= 1"))
        if not 0.0 <= self.gamma <= 1.0:
            out.append(("gamma", "must be in [0, 1]"))
        if self.token_budget < 0:
            out.append(("token_budget", "must be >= 0"))
        if self.backend.max_attempts < 1:
            out.append(("max_attempts", "must be >= 1"))
        return out

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["game"] = self.game.value
        d["ablation_mode"] = self.ablation_mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        d = dict(d)
        seeds = d.get("seeds")
        if isinstance(seeds, dict):
            d["seeds"] = list(range(int(seeds.get("start", 0)), int(seeds.get("start", 0)) + int(seeds["count"])))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
        if "game" not in d or "seeds" not in d:
            raise ConfigError("'game' and 'seeds' are required")
        try:
            return cls(**d)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf'^\s*"?{re.escape(key)}"?\s*[=:]', re.M)
    m = pat.search(text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate; every error message starts with ``path:line:`` where a line is known."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    else:
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            line = getattr(exc, "lineno", None)
            if line is None:
                m = re.search(r"line (\d+)", str(exc))
                line = m.group(1) if m else "?"
            raise ConfigError(f"{path}:{line}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}:1: top level must be a table/object")
    try:
        return RunConfig.from_dict(raw)
    except ConfigError as exc:
        msg = str(exc)
        key = None
        m = re.match(r"(\w+):", msg) or re.search(r"unknown key\(s\): (\w+)", msg)
        if m:
            key = m.group(1)
        else:
            for name in ("game", "ablation_mode", "seeds", "mode"):
                if name in msg or f"'{raw.get(name)}'" in msg:
                    key = name
                    break
        line = _line_of(text, key) if key else None
        raise ConfigError(f"{path}:{line or '?'}: {msg}") from exc
