"""Experiment runner and reporting.

Experiment directory::

    config.json
    result.json                 merged RunResult over all trials
    trials/trial-000/           one run directory per trial (see agent.runner)

``emit_report`` writes ``report.csv`` with the frozen columns
:data:`CSV_COLUMNS`, ``episodes.jsonl`` (one record per playthrough) and
``curves.svg``.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from .agent.core import Mode
from .agent.runner import run_training_run
from .config import ConfigError, RunConfig, load_config
from .env.core import GameId, GameState
from .env.log import read_episode_log
from .gateway import (
    Gateway,
    RecordingBackend,
    RemoteBackend,
    ReplayBackend,
    ReplayStore,
)
from .knowledge import NotFound, export_snapshot, load_snapshot
from .oracles import SCRIPTED_BACKENDS
from .results import EpisodeRecord, RunResult, compute_curve

log = logging.getLogger(__name__)

CSV_COLUMNS = ("label", "block", "first_episode", "last_episode", "playthroughs", "successes", "success_rate")


class MissingSnapshot(NotFound):
    pass


class ReportError(ValueError):
    pass


def _backend_from_mode(mode: str, config: RunConfig):
    b = config.backend
    if mode == "live":
        return RemoteBackend.from_env(model=b.model, base_url=b.base_url, max_attempts=b.max_attempts)
    if mode.startswith("scripted:"):
        name = mode.split(":", 1)[1]
        if name not in SCRIPTED_BACKENDS:
            raise ConfigError(f"unknown scripted backend {name!r}; have {sorted(SCRIPTED_BACKENDS)}")
        if name == "oracle":
            return SCRIPTED_BACKENDS[name](config.game)
        return SCRIPTED_BACKENDS[name](config.rng_seed)
    if mode == "record":
        if not b.store:
            raise ConfigError("record mode needs backend.store")
        return RecordingBackend(_backend_from_mode(b.inner, config), ReplayStore(b.store))
    if mode == "replay":
        if not b.store:
            raise ConfigError("replay mode needs backend.store")
        return ReplayBackend(ReplayStore(b.store))
    raise ConfigError(f"unknown backend mode {mode!r}")


def make_gateway(config: RunConfig, mode: str | None = None) -> Gateway:
    """Gateway for ``config.backend`` (``mode`` overrides ``backend.mode``)."""
    backend = _backend_from_mode(mode or config.backend.mode, config)
    return Gateway(
        backend,
        max_concurrency=config.backend.max_concurrency,
        token_budget=config.token_budget or None,
        context_budget=config.context_budget_chars,
    )


def observers_for(backend) -> list[Callable[[GameState], None]]:
    """State observers an oracle backend needs (the omniscient Minesweeper oracle)."""
    while isinstance(backend, RecordingBackend):
        backend = backend.inner
    observe = getattr(getattr(backend, "oracle", None), "observe", None)
    return [observe] if observe else []


def run_experiment(
    config: RunConfig | str | Path,
    out_dir: str | Path,
    gateway: Gateway | None = None,
) -> RunResult:
    """Run every trial of ``config`` (resuming any finished episodes) and merge the results."""
    if not isinstance(config, RunConfig):
        config = load_config(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(json.dumps(config.to_dict(), sort_keys=True, indent=1) + "\n")
    gateway = gateway or make_gateway(config)
    observers = observers_for(gateway.backend)

    def one(trial: int) -> RunResult:
        return run_training_run(config, gateway, out_dir / "trials" / f"trial-{trial:03d}", trial=trial, observers=observers)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(one, t) for t in range(config.trials_per_seed)]
        errors = [f.exception() for f in futures]
    for err in errors:
        if err is not None:
            raise err
    parts = [f.result() for f in futures]
    merged = RunResult.from_records(
        config.to_dict(),
        [r for p in parts for r in p.records],
        config.block_size,
        sum(p.reflections for p in parts),
        [b for p in parts for b in p.knowledge_boundaries],
    )
    merged.write(out_dir / "result.json")
    return merged


def recompute_from_logs(out_dir: str | Path, block_size: int) -> tuple[float, list[tuple[int, float]]]:
    """Aggregate and per-block success fractions straight from the episode logs."""
    wins: dict[int, list[int]] = {}
    total = successes = 0
    for path in sorted(Path(out_dir).glob("trials/*/episodes/episode-*.jsonl")):
        header, trajectory, outcome = read_episode_log(path)
        reward = sum(s.reward for s in trajectory.steps)
        block = (header["episode"] - 1) // block_size
        wins.setdefault(block, []).append(reward)
        total += 1
        successes += reward
    if not total:
        raise ReportError(f"no episode logs under {out_dir}")
    return successes / total, [(b, sum(v) / len(v)) for b, v in sorted(wins.items())]


# -- comparisons --------------------------------------------------------------------


def to_percent(fraction: float) -> Decimal:
    return (Decimal(repr(float(fraction))) * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


def _pct(value: float | Decimal) -> Decimal:
    return Decimal(str(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


def format_gain(value: float | Decimal, baseline: float | Decimal) -> str:
    """``"53.5 (+27.7)"``: value with its gain over a zero-shot baseline (percent points)."""
    v, b = _pct(value), _pct(baseline)
    return f"{v} ({v - b:+})"


def format_change(value: float | Decimal, reference: float | Decimal) -> str:
    """``"50.4 [-3.1]"``: value with its change relative to in-domain performance."""
    v, r = _pct(value), _pct(reference)
    return f"{v} [{v - r:+}]"


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    value: Decimal
    reference: Decimal | None = None
    style: str | None = None  # "gain" -> (.), "change" -> [.]

    @property
    def delta(self) -> Decimal | None:
        return None if self.reference is None else self.value - self.reference

    @property
    def formatted(self) -> str:
        if self.style == "gain":
            return format_gain(self.value, self.reference)
        if self.style == "change":
            return format_change(self.value, self.reference)
        return str(self.value)


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow] = field(default_factory=list)

    def add(self, label: str, aggregate: float, reference: float | None = None, style: str | None = None) -> ComparisonRow:
        row = ComparisonRow(label, to_percent(aggregate), None if reference is None else to_percent(reference), style)
        self.rows.append(row)
        return row

    def to_text(self) -> str:
        width = max(len(r.label) for r in self.rows)
        return "\n".join(f"{r.label.ljust(width)}  {r.formatted}" for r in self.rows) + "\n"

    def write(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / "comparison.csv"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["condition", "success_pct", "delta", "formatted"])
        for r in self.rows:
            w.writerow([r.label, str(r.value), "" if r.delta is None else f"{r.delta:+}", r.formatted])
        path.write_text(buf.getvalue(), encoding="utf-8")
        return path


def run_generalization(
    trained_run_dir: str | Path,
    target_game: GameId | str,
    unseen_seeds: Sequence[int],
    out_dir: str | Path,
    *,
    gateway: Gateway | None = None,
    backend_mode: str | None = None,
    trials_per_seed: int | None = None,
    source_trial: int = 0,
) -> ComparisonReport:
    """Evaluate a trained run's knowledge on unseen seeds of its own game or on another game.

    Intra-game: the latest snapshot is reused without further reflection and
    compared with the in-domain aggregate (``[change]``).  Inter-game: a
    zero-shot baseline with reference rules is run on the target game, then
    the snapshot is imported and refined at the trained cadence
    (``(gain)`` over the baseline).
    """
    trained_run_dir = Path(trained_run_dir)
    out_dir = Path(out_dir)
    target_game = GameId(target_game)
    result_path = trained_run_dir / "result.json"
    if not result_path.exists():
        raise MissingSnapshot(f"{trained_run_dir} has no result.json")
    trained = RunResult.read(result_path)
    base_cfg = RunConfig.from_dict(trained.config)
    try:
        snapshot = load_snapshot(trained_run_dir / "trials" / f"trial-{source_trial:03d}" / "knowledge")
    except NotFound as exc:
        raise MissingSnapshot(str(exc)) from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    snap_path = export_snapshot(snapshot, out_dir / "imported-knowledge.json")

    common = dict(
        seeds=list(unseen_seeds),
        episodes_per_run=len(unseen_seeds),
        trials_per_seed=trials_per_seed or base_cfg.trials_per_seed,
        block_size=base_cfg.reflection_frequency,
        env_options={},
    )

    def run(label: str, **overrides: Any) -> RunResult:
        # step limit and block size fall back to the target game's defaults
        cfg = RunConfig.from_dict(base_cfg.to_dict() | common | overrides | {"max_steps_per_episode": None})
        gw = gateway or make_gateway(cfg, backend_mode)
        return run_experiment(cfg, out_dir / label, gw)

    report = ComparisonReport()
    trained_game = base_cfg.game
    if target_game is trained_game:
        res = run("intra", name=f"{base_cfg.name}-intra", ablation_mode=Mode.ZERO_SHOT, initial_knowledge=str(snap_path))
        report.add(f"{trained_game} in-domain", trained.aggregate)
        report.add(f"{trained_game} unseen layouts", res.aggregate, trained.aggregate, "change")
    else:
        base = run(
            "baseline",
            name=f"{target_game}-zero-shot",
            game=target_game,
            ablation_mode=Mode.ZERO_SHOT,
            initial_knowledge="ground_truth",
        )
        res = run(
            "transfer",
            name=f"{base_cfg.name}-to-{target_game}",
            game=target_game,
            ablation_mode=Mode.FULL,
            initial_knowledge=str(snap_path),
        )
        report.add(f"zero-shot w/ rules on {target_game}", base.aggregate)
        report.add(f"{trained_game}-trained on {target_game}", res.aggregate, base.aggregate, "gain")
    report.write(out_dir)
    return report


# -- reports ------------------------------------------------------------------------


def _block_rows(label: str, result: RunResult) -> list[list[Any]]:
    bs = int(result.config.get("block_size") or result.config.get("reflection_frequency") or 1)
    rows = []
    for block, frac in compute_curve(result.records, bs):
        members = [r for r in result.records if (r.episode - 1) // bs == block]
        rows.append(
            [label, block, block * bs + 1, (block + 1) * bs, len(members), sum(r.success for r in members), f"{frac:.6f}"]
        )
    return rows


def _svg(curves: Sequence[tuple[str, list[tuple[int, float]]]], boundaries: Sequence[int]) -> bytes:
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib.figure import Figure

    with matplotlib.rc_context({"svg.hashsalt": "celagent", "svg.fonttype": "none"}):
        fig = Figure(figsize=(6.4, 4.0))
        ax = fig.add_subplot()
        for x in boundaries:
            ax.axvline(x, color="cyan", linewidth=0.8, zorder=0)
        for label, points in curves:
            xs, ys = zip(*points)
            ax.plot(xs, ys, marker="o", markersize=3, label=label)
        ax.set_xlabel("Episode")
        ax.set_ylabel("Success rate")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="lower right")
        ax.grid(alpha=0.3)
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    return buf.getvalue()


def emit_report(results: Mapping[str, RunResult] | Sequence[RunResult], out_dir: str | Path) -> dict[str, Path]:
    """Write ``report.csv``, ``episodes.jsonl`` and ``curves.svg`` (one curve per labelled result)."""
    if not isinstance(results, Mapping):
        results = {r.config.get("name", f"run{i}"): r for i, r in enumerate(results)}
    if not results:
        raise ReportError("no results to report")
    for label, res in results.items():
        if not res.records or not res.series:
            raise ReportError(f"{label}: empty success-rate series")

    rows = [row for label, res in results.items() for row in _block_rows(label, res)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(rows)

    episodes = "".join(
        json.dumps({"label": label, **r.to_dict()}, sort_keys=True) + "\n"
        for label, res in results.items()
        for r in res.records
    )
    curves = [(label, [(int(row[3]), float(row[6])) for row in rows if row[0] == label]) for label in results]
    first = next(iter(results.values()))
    svg = _svg(curves, first.knowledge_boundaries)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out_dir / "report.csv", "jsonl": out_dir / "episodes.jsonl", "svg": out_dir / "curves.svg"}
    paths["csv"].write_text(buf.getvalue(), encoding="utf-8")
    paths["jsonl"].write_text(episodes, encoding="utf-8")
    paths["svg"].write_bytes(svg)
    return paths


def load_result(path: str | Path) -> RunResult:
    path = Path(path)
    return RunResult.read(path / "result.json" if path.is_dir() else path)


__all__ = [
    "ComparisonReport",
    "ComparisonRow",
    "EpisodeRecord",
    "MissingSnapshot",
    "compute_curve",
    "emit_report",
    "format_change",
    "format_gain",
    "make_gateway",
    "recompute_from_logs",
    "run_experiment",
    "run_generalization",
]
