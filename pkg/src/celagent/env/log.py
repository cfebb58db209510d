"""Line-delimited JSON episode logs.

One file per episode::

    {"kind": "header", "format": 1, "game": ..., "seed": ..., "trial": ..., "episode": ..., "config": {...}}
    {"kind": "step", "t": 0, "observation": ..., "action": ..., "reward": 0}
    ...
    {"kind": "outcome", "terminal_observation": ..., "success": ..., "steps_taken": ...,
     "termination_reason": ..., "return_value": ...}

Keys are written sorted, so identical episodes give identical bytes.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .core import EpisodeOutcome, StepRecord, Trajectory

LOG_FORMAT = 1


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def episode_lines(
    trajectory: Trajectory,
    outcome: EpisodeOutcome,
    *,
    game: str,
    seed: int,
    trial: int = 0,
    config: dict[str, Any] | None = None,
) -> list[str]:
    header = {
        "kind": "header",
        "format": LOG_FORMAT,
        "game": str(game),
        "seed": seed,
        "trial": trial,
        "episode": trajectory.episode_index,
        "config": config or {},
    }
    lines = [dumps(header)]
    for t, s in enumerate(trajectory.steps):
        lines.append(dumps({"kind": "step", "t": t, **s.to_dict()}))
    lines.append(dumps({"kind": "outcome", "terminal_observation": trajectory.terminal_observation, **outcome.to_dict()}))
    return lines


def write_episode_log(path: str | Path, trajectory: Trajectory, outcome: EpisodeOutcome, **meta: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(episode_lines(trajectory, outcome, **meta)) + "\n", encoding="utf-8")
    tmp.replace(path)
    return path


def read_episode_log(path: str | Path) -> tuple[dict[str, Any], Trajectory, EpisodeOutcome]:
    rows = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not rows or rows[0].get("kind") != "header" or rows[-1].get("kind") != "outcome":
        raise ValueError(f"{path}: not a complete episode log")
    header, footer = rows[0], rows[-1]
    steps = []
    for i, row in enumerate(rows[1:-1]):
        if row.get("kind") != "step" or row.get("t") != i:
            raise ValueError(f"{path}: step line {i} out of order")
        steps.append(StepRecord(row["observation"], row["action"], int(row["reward"])))
    trajectory = Trajectory(int(header["episode"]), tuple(steps), footer.get("terminal_observation"))
    outcome = EpisodeOutcome.from_dict(footer)
    return header, trajectory, outcome
