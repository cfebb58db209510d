"""Versioned rulebook/playbook store.

A store is a directory holding ``knowledge.jsonl``: one JSON object per
version, append-only.  Version 0 is always the tabula-rasa pair (empty
rulebook, bootstrap playbook) or, for transfer runs, is followed by an
``import`` entry.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .env.core import GameId
from .texts import BOOTSTRAP_PLAYBOOK

STORE_FILE = "knowledge.jsonl"
EXPORT_FORMAT = "celagent-knowledge/1"


class KnowledgeError(Exception):
    pass


class NotFound(KnowledgeError, FileNotFoundError):
    pass


class CorruptStore(KnowledgeError, ValueError):
    pass


class StorageFailure(KnowledgeError, OSError):
    pass


@dataclass(frozen=True)
class Rulebook:
    version: int
    text: str
    derived_from: tuple[int, int] | None = None
    reasoning_trace: str = ""
    carried_forward: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "text": self.text,
            "derived_from": list(self.derived_from) if self.derived_from else None,
            "reasoning_trace": self.reasoning_trace,
            "carried_forward": self.carried_forward,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]):
        rng = d.get("derived_from")
        return cls(
            int(d["version"]),
            d["text"],
            tuple(rng) if rng else None,
            d.get("reasoning_trace", ""),
            bool(d.get("carried_forward", False)),
        )


class Playbook(Rulebook):
    pass


@dataclass(frozen=True)
class KnowledgeSnapshot:
    rulebook: Rulebook
    playbook: Playbook
    run_id: str
    game: GameId
    source: str = "init"

    @property
    def version(self) -> int:
        return self.rulebook.version

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "run_id": self.run_id,
            "game": str(self.game),
            "source": self.source,
            "rulebook": self.rulebook.to_dict(),
            "playbook": self.playbook.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "KnowledgeSnapshot":
        try:
            snap = cls(
                Rulebook.from_dict(d["rulebook"]),
                Playbook.from_dict(d["playbook"]),
                d.get("run_id", ""),
                GameId(d["game"]),
                d.get("source", "init"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptStore(f"malformed knowledge entry: {exc}") from exc
        if snap.rulebook.version != snap.playbook.version or snap.version != d.get("version", snap.version):
            raise CorruptStore("rulebook and playbook versions disagree")
        return snap


def init_tabula_rasa(game: GameId | str, run_id: str = "") -> KnowledgeSnapshot:
    return KnowledgeSnapshot(Rulebook(0, ""), Playbook(0, BOOTSTRAP_PLAYBOOK), run_id, GameId(game))


def should_reflect(episode_index: int, frequency: int) -> bool:
    """True after every ``frequency``-th episode (episodes counted from 1)."""
    if episode_index < 1 or frequency < 1:
        raise ValueError("episode_index and frequency must be >= 1")
    return episode_index % frequency == 0


def _parse_lines(text: str, where: str) -> list[KnowledgeSnapshot]:
    entries = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptStore(f"{where}:{lineno}: {exc.msg}") from exc
        snap = KnowledgeSnapshot.from_dict(raw)
        if snap.version != len(entries):
            raise CorruptStore(f"{where}:{lineno}: expected version {len(entries)}, found {snap.version}")
        entries.append(snap)
    if not entries:
        raise CorruptStore(f"{where}: empty store")
    return entries


class KnowledgeStore:
    """Append-only history of knowledge snapshots for one run."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.path = self.directory / STORE_FILE
        self._lock = threading.Lock()
        self._entries: list[KnowledgeSnapshot] | None = None

    @classmethod
    def create(cls, directory: str | Path, game: GameId | str, run_id: str = "") -> "KnowledgeStore":
        """Open the store at ``directory``, writing the tabula-rasa entry if it is new."""
        store = cls(directory)
        if not store.path.exists():
            store._append(init_tabula_rasa(game, run_id))
        return store

    def exists(self) -> bool:
        return self.path.exists()

    def history(self) -> list[KnowledgeSnapshot]:
        if self._entries is None:
            if not self.path.exists():
                raise NotFound(f"no knowledge store at {self.directory}")
            self._entries = _parse_lines(self.path.read_text(encoding="utf-8"), str(self.path))
        return list(self._entries)

    def latest(self) -> KnowledgeSnapshot:
        return self.history()[-1]

    def load(self, version: int | None = None) -> KnowledgeSnapshot:
        entries = self.history()
        if version is None:
            return entries[-1]
        if not 0 <= version < len(entries):
            raise NotFound(f"version {version} not in store (have 0..{len(entries) - 1})")
        return entries[version]

    def _append(self, snap: KnowledgeSnapshot) -> None:
        line = json.dumps(snap.to_dict(), sort_keys=True, ensure_ascii=False)
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"cannot write {self.path}: {exc}") from exc
        if self._entries is not None:
            self._entries.append(snap)

    def commit_update(
        self,
        new_rule_text: str,
        new_playbook_text: str,
        traces: tuple[str, str] = ("", ""),
        episode_range: tuple[int, int] | None = None,
        *,
        carried_forward: tuple[bool, bool] = (False, False),
        source: str = "reflection",
    ) -> KnowledgeSnapshot:
        if new_rule_text is None or new_playbook_text is None:
            raise ValueError("knowledge texts must not be None")
        with self._lock:
            prior = self.latest()
            k = prior.version + 1
            snap = KnowledgeSnapshot(
                Rulebook(k, new_rule_text, episode_range, traces[0], carried_forward[0]),
                Playbook(k, new_playbook_text, episode_range, traces[1], carried_forward[1]),
                prior.run_id,
                prior.game,
                source,
            )
            self._append(snap)
        return snap

    def import_snapshot(self, snapshot: KnowledgeSnapshot, label: str = "") -> KnowledgeSnapshot:
        """Commit another run's knowledge as the next version (cross-run or cross-game transfer)."""
        return self.commit_update(
            snapshot.rulebook.text,
            snapshot.playbook.text,
            (snapshot.rulebook.reasoning_trace, snapshot.playbook.reasoning_trace),
            None,
            source=f"import:{label or snapshot.run_id}:{snapshot.game}:v{snapshot.version}",
        )

    def reflections(self) -> list[KnowledgeSnapshot]:
        return [s for s in self.history() if s.source == "reflection"]


def commit_update(store: KnowledgeStore, *args: Any, **kwargs: Any) -> KnowledgeSnapshot:
    return store.commit_update(*args, **kwargs)


def export_snapshot(snapshot: KnowledgeSnapshot, path: str | Path) -> Path:
    path = Path(path)
    data = {"format": EXPORT_FORMAT, **snapshot.to_dict()}
    try:
        path.write_text(json.dumps(data, sort_keys=True, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise StorageFailure(str(exc)) from exc
    return path


def load_snapshot(path: str | Path, version: int | None = None) -> KnowledgeSnapshot:
    """Load from a store directory, a run directory, a ``knowledge.jsonl`` or an exported file."""
    path = Path(path)
    if path.is_dir():
        for candidate in (path / STORE_FILE, path / "knowledge" / STORE_FILE):
            if candidate.exists():
                return KnowledgeStore(candidate.parent).load(version)
        raise NotFound(f"no knowledge store under {path}")
    if not path.exists():
        raise NotFound(f"{path} does not exist")
    if path.name == STORE_FILE:
        return KnowledgeStore(path.parent).load(version)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptStore(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or data.get("format") != EXPORT_FORMAT:
        raise CorruptStore(f"{path}: not an exported knowledge snapshot")
    snap = KnowledgeSnapshot.from_dict(data)
    if version is not None and version != snap.version:
        raise NotFound(f"{path} holds version {snap.version}, not {version}")
    return snap

