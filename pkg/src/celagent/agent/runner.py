"""One sequential learning run: episodes over the seed schedule with reflection at a cadence.

Run directory::

    config.json                 config snapshot
    checkpoint.json             {"episodes_completed": k}
    episodes/episode-0001.jsonl one episode log per episode (see env.log)
    transcript.jsonl            decision records and reflection records, in episode order
    knowledge/knowledge.jsonl   versioned rulebook/playbook store

An interrupted run resumes from the checkpoint; episodes are atomic, so a
partially played episode is replayed from its start.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Callable, Sequence

from ..config import RunConfig
from ..env.core import GameState, reset
from ..env.log import dumps, read_episode_log, write_episode_log
from ..gateway import Gateway
from ..knowledge import KnowledgeSnapshot, KnowledgeStore, load_snapshot, should_reflect
from ..results import EpisodeRecord, RunResult
from ..rng import SeededRng, derive_seed
from ..texts import BOOTSTRAP_PLAYBOOK, GROUND_TRUTH_RULES
from .core import CallSettings, Mode, ReflectionRecord, reflect, run_episode

log = logging.getLogger(__name__)


class RunAborted(RuntimeError):
    """A run stopped on an error; rerunning with the same directory resumes it."""

    def __init__(self, run_dir: Path, episodes_completed: int, cause: BaseException) -> None:
        super().__init__(f"run {run_dir} aborted after {episodes_completed} episode(s): {cause!r}")
        self.run_dir = run_dir
        self.episodes_completed = episodes_completed


def reflection_due(mode: Mode, episode: int, frequency: int) -> bool:
    if mode is Mode.FULL:
        return should_reflect(episode, frequency)
    if mode is Mode.RULES_ONCE:
        return episode == frequency
    return False


def _episode_path(run_dir: Path, k: int) -> Path:
    return run_dir / "episodes" / f"episode-{k:04d}.jsonl"


def _checkpoint(run_dir: Path) -> int:
    path = run_dir / "checkpoint.json"
    if not path.exists():
        return 0
    return int(json.loads(path.read_text(encoding="utf-8"))["episodes_completed"])


def _write_checkpoint(run_dir: Path, k: int) -> None:
    tmp = run_dir / "checkpoint.json.tmp"
    tmp.write_text(json.dumps({"episodes_completed": k}) + "\n", encoding="utf-8")
    tmp.replace(run_dir / "checkpoint.json")


def initial_snapshot(spec: str, game: str) -> KnowledgeSnapshot:
    """Resolve ``initial_knowledge``: ``"ground_truth"`` or a snapshot path."""
    if spec == "ground_truth":
        from ..knowledge import Playbook, Rulebook

        return KnowledgeSnapshot(Rulebook(0, GROUND_TRUTH_RULES[str(game)]), Playbook(0, BOOTSTRAP_PLAYBOOK), "ground_truth", game)
    return load_snapshot(spec)


def _reflection_line(snap: KnowledgeSnapshot, run_dir: Path) -> str:
    start, end = snap.rulebook.derived_from
    outcomes = tuple(read_episode_log(_episode_path(run_dir, k))[2].success for k in range(start, end + 1))
    record = ReflectionRecord(
        (start, end),
        snap.rulebook.reasoning_trace,
        snap.playbook.reasoning_trace,
        snap.rulebook.version,
        snap.playbook.version,
        outcomes,
        (snap.rulebook.carried_forward, snap.playbook.carried_forward),
    )
    return dumps({"kind": "reflection", "episode": end, **record.to_dict()})


class _Transcript:
    """Episode and reflection lines kept in canonical order (episode k, then its reflection)."""

    def __init__(self, path: Path) -> None:
        self.path = path
        self.episodes: dict[int, str] = {}
        self.reflections: dict[int, str] = {}

    def load(self, episodes_completed: int, store: KnowledgeStore, run_dir: Path) -> None:
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                row = json.loads(line)
                if row["kind"] == "episode" and row["episode"] <= episodes_completed:
                    self.episodes.setdefault(row["episode"], line)
        for snap in store.reflections():
            self.reflections[snap.rulebook.derived_from[1]] = _reflection_line(snap, run_dir)
        self.flush()

    def flush(self) -> None:
        keys = sorted(set(self.episodes) | set(self.reflections))
        lines = []
        for k in keys:
            if k in self.episodes:
                lines.append(self.episodes[k])
            if k in self.reflections:
                lines.append(self.reflections[k])
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        tmp.replace(self.path)

    def records(self) -> list[EpisodeRecord]:
        return [EpisodeRecord.from_dict(json.loads(self.episodes[k])) for k in sorted(self.episodes)]


def run_training_run(
    config: RunConfig,
    gateway: Gateway,
    run_dir: str | Path,
    *,
    trial: int = 0,
    observers: Sequence[Callable[[GameState], None]] = (),
) -> RunResult:
    """Play ``config.episodes_per_run`` episodes for one trial, reflecting per the ablation mode."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    config_path = run_dir / "config.json"
    cfg = config.to_dict()
    if config_path.exists():
        previous = json.loads(config_path.read_text(encoding="utf-8"))
        if {k: v for k, v in previous.items() if k != "backend"} != {k: v for k, v in cfg.items() if k != "backend"}:
            raise ValueError(f"{run_dir} holds a run with a different config")
    config_path.write_text(json.dumps(cfg, sort_keys=True, indent=1) + "\n", encoding="utf-8")

    mode = config.ablation_mode
    run_id = f"{config.name}/t{trial}"
    store = KnowledgeStore.create(run_dir / "knowledge", config.game, run_id)
    done = _checkpoint(run_dir)
    if config.initial_knowledge and done == 0 and len(store.history()) == 1:
        store.import_snapshot(initial_snapshot(config.initial_knowledge, config.game), label=config.initial_knowledge)

    transcript = _Transcript(run_dir / "transcript.jsonl")
    transcript.load(done, store, run_dir)
    header_config = {k: v for k, v in cfg.items() if k != "backend"}

    def settings(session: str) -> CallSettings:
        return CallSettings(
            config.max_response_tokens, config.temperature, f"{run_id}/{session}", config.context_budget_chars
        )

    for k in range(1, config.episodes_per_run + 1):
        seed = config.seeds[(k - 1) % len(config.seeds)]
        if k > done:
            snapshot = store.latest()
            try:
                result = run_episode(
                    reset(config.game, seed, **config.env_options),
                    snapshot,
                    mode,
                    gateway,
                    episode_index=k,
                    step_limit=config.max_steps_per_episode,
                    fallback_budget=config.fallback_budget,
                    rng=SeededRng(derive_seed(config.rng_seed, trial, k), 0xA6),
                    settings=settings(f"e{k}"),
                    observers=observers,
                )
            except Exception as exc:
                raise RunAborted(run_dir, k - 1, exc) from exc
            write_episode_log(
                _episode_path(run_dir, k),
                result.trajectory,
                result.outcome,
                game=config.game,
                seed=seed,
                trial=trial,
                config=header_config,
            )
            record = EpisodeRecord(
                trial,
                k,
                seed,
                result.outcome.success,
                result.outcome.steps_taken,
                result.outcome.termination_reason.value,
                result.outcome.return_value,
                snapshot.version,
            )
            transcript.episodes[k] = dumps(
                {"kind": "episode", **record.to_dict(), "decisions": [d.to_dict() for d in result.decisions]}
            )
            transcript.flush()
            _write_checkpoint(run_dir, k)
            done = k

        if reflection_due(mode, k, config.reflection_frequency) and k not in transcript.reflections:
            start = max((s.rulebook.derived_from[1] for s in store.reflections()), default=0) + 1
            logs = [read_episode_log(_episode_path(run_dir, i)) for i in range(start, k + 1)]
            try:
                snap, _ = reflect([t for _, t, _ in logs], [o for _, _, o in logs], store, gateway, settings(f"r{k}"))
            except Exception as exc:
                raise RunAborted(run_dir, k, exc) from exc
            transcript.reflections[k] = _reflection_line(snap, run_dir)
            transcript.flush()
            log.info("%s: knowledge v%d after episode %d", run_id, snap.version, k)

    return RunResult.from_records(
        cfg,
        transcript.records(),
        config.block_size,
        len(store.reflections()),
        transcript.reflections,
    )


def load_run_records(run_dir: str | Path) -> list[EpisodeRecord]:
    transcript = Path(run_dir) / "transcript.jsonl"
    rows = [json.loads(line) for line in transcript.read_text(encoding="utf-8").splitlines()]
    return [EpisodeRecord.from_dict(r) for r in rows if r["kind"] == "episode"]


def transcript_rows(run_dir: str | Path) -> list[dict[str, Any]]:
    path = Path(run_dir) / "transcript.jsonl"
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
