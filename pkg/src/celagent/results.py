"""Per-episode records and the success-rate statistics computed from them."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class EpisodeRecord:
    trial: int
    episode: int
    seed: int
    success: bool
    steps: int
    termination_reason: str
    return_value: float
    knowledge_version: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EpisodeRecord":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def aggregate(records: Sequence[EpisodeRecord]) -> float:
    """Successes over playthroughs."""
    if not records:
        raise ValueError("no records")
    return float(np.mean([r.success for r in records]))


def compute_curve(records: Iterable[EpisodeRecord], block_size: int) -> list[tuple[int, float]]:
    """Success fraction per block of consecutive episode indices, pooled over trials.

    Block ``b`` holds episodes ``b*block_size + 1 .. (b+1)*block_size``.
    """
    records = list(records)
    if not records:
        raise ValueError("no records")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    episodes = np.array([r.episode for r in records])
    wins = np.array([r.success for r in records], dtype=float)
    blocks = (episodes - 1) // block_size
    return [(int(b), float(wins[blocks == b].mean())) for b in np.unique(blocks)]


@dataclass
class RunResult:
    config: dict[str, Any]
    records: list[EpisodeRecord]
    series: list[tuple[int, float]]
    aggregate: float
    reflections: int = 0
    knowledge_boundaries: list[int] = field(default_factory=list)

    @classmethod
    def from_records(
        cls,
        config: dict[str, Any],
        records: Iterable[EpisodeRecord],
        block_size: int,
        reflections: int = 0,
        knowledge_boundaries: Iterable[int] = (),
    ) -> "RunResult":
        records = sorted(records, key=lambda r: (r.trial, r.episode))
        return cls(
            config,
            records,
            compute_curve(records, block_size),
            aggregate(records),
            reflections,
            sorted(set(knowledge_boundaries)),
        )

    @property
    def playthroughs(self) -> int:
        return len(self.records)

    @property
    def successes(self) -> int:
        return sum(r.success for r in self.records)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "records": [r.to_dict() for r in self.records],
            "series": [list(p) for p in self.series],
            "aggregate": self.aggregate,
            "reflections": self.reflections,
            "knowledge_boundaries": self.knowledge_boundaries,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunResult":
        return cls(
            d["config"],
            [EpisodeRecord.from_dict(r) for r in d["records"]],
            [(int(b), float(f)) for b, f in d["series"]],
            float(d["aggregate"]),
            int(d.get("reflections", 0)),
            list(d.get("knowledge_boundaries", [])),
        )

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, path: str | Path) -> "RunResult":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
