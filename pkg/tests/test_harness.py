import csv
import json
from decimal import Decimal

import pytest

from celagent import harness
from celagent.config import ConfigError, RunConfig, load_config
from celagent.gateway import Gateway, RecordingBackend, ReplayBackend, ReplayMiss
from celagent.harness import (
    CSV_COLUMNS,
    ComparisonReport,
    MissingSnapshot,
    ReportError,
    emit_report,
    format_change,
    format_gain,
    recompute_from_logs,
    run_experiment,
    run_generalization,
    to_percent,
)
from celagent.knowledge import KnowledgeStore
from celagent.oracles import random_cel_backend, scripted_cel_backend
from celagent.results import EpisodeRecord, RunResult, aggregate, compute_curve

from conftest import small_config


def records(outcomes, trials=1):
    """``outcomes[k]`` is the success of episode k+1, repeated for every trial."""
    return [
        EpisodeRecord(t, k + 1, k, bool(s), 3, "objective_met" if s else "step_limit", 1 if s else 0, 0)
        for t in range(trials)
        for k, s in enumerate(outcomes)
    ]


# -- statistics ---------------------------------------------------------------------


def test_table_arithmetic():
    assert format_gain(53.5, 25.8) == "53.5 (+27.7)"
    assert format_change(50.4, 53.5) == "50.4 [-3.1]"
    assert format_gain(Decimal("25.8"), Decimal("25.8")) == "25.8 (+0.0)"
    assert format_change(97, 96.95) == "97.0 [+0.0]"


def test_138_of_256():
    recs = [EpisodeRecord(i // 32, i % 32 + 1, i % 32, i < 138, 1, "x", 0, 0) for i in range(256)]
    assert round(aggregate(recs), 3) == 0.539
    assert aggregate(recs) == 138 / 256
    assert to_percent(138 / 256) == Decimal("53.9")


def test_percent_rounding_is_half_up():
    assert to_percent(0.5355) == Decimal("53.6")
    assert to_percent(0.2575) == Decimal("25.8")
    assert to_percent(1) == Decimal("100.0")


def test_comparison_report(tmp_path):
    report = ComparisonReport()
    report.add("in-domain", 0.535)
    report.add("unseen", 0.504, 0.535, "change")
    report.add("transfer", 0.535, 0.258, "gain")
    assert report.to_text().splitlines() == ["in-domain  53.5", "unseen     50.4 [-3.1]", "transfer   53.5 (+27.7)"]
    rows = list(csv.reader(report.write(tmp_path).open()))
    assert rows[0] == ["condition", "success_pct", "delta", "formatted"]
    assert rows[2] == ["unseen", "50.4", "-3.1", "50.4 [-3.1]"]


def test_compute_curve_pools_trials():
    recs = records([1, 0, 0, 1, 1, 1], trials=2)
    assert compute_curve(recs, 3) == [(0, 1 / 3), (1, 1.0)]
    assert compute_curve(recs, 6) == [(0, 4 / 6)]
    with pytest.raises(ValueError):
        compute_curve([], 3)
    with pytest.raises(ValueError):
        compute_curve(recs, 0)


def test_run_result_round_trip(tmp_path):
    res = RunResult.from_records({"block_size": 2}, records([1, 0, 1]), 2, 1, [2])
    assert res.playthroughs == 3 and res.successes == 2
    assert RunResult.read(res.write(tmp_path / "r.json")).to_dict() == res.to_dict()


# -- config -------------------------------------------------------------------------


def test_config_defaults():
    cfg = RunConfig("sokoban", [1, 2, 3])
    assert cfg.max_steps_per_episode == 50 and cfg.episodes_per_run == 3 and cfg.block_size == 5
    assert cfg.trials_per_seed == 8 and cfg.reflection_frequency == 5 and cfg.fallback_budget == 3
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_load_config_toml(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(
        'name = "fl"\ngame = "frozen_lake"\nseeds = {start = 10, count = 4}\n'
        'ablation_mode = "rules_once"\n[backend]\nmode = "scripted:oracle"\n[env_options]\nholes = 4\n'
    )
    cfg = load_config(path)
    assert cfg.seeds == [10, 11, 12, 13] and cfg.ablation_mode == "rules_once"
    assert cfg.backend.mode == "scripted:oracle" and cfg.env_options == {"holes": 4}


@pytest.mark.parametrize(
    "body, line, fragment",
    [
        ('game = "frozen_lake"\nseeds = [1]\nbogus = 3\n', 3, "unknown key"),
        ('game = "frozen_lake"\nseeds = [1]\nreflection_frequency = 0\n', 3, "reflection_frequency"),
        ('seeds = [1]\ngame = "chess"\n', 2, "chess"),
        ('game = "frozen_lake"\nseeds = [1]\nablation_mode = "odd"\n', 3, "odd"),
        ('game = "frozen_lake"\nseeds = [\n', 3, "end of document"),
        ('seeds = [1]\n', "?", "required"),
    ],
)
def test_load_config_errors_carry_line_numbers(tmp_path, body, line, fragment):
    path = tmp_path / "c.toml"
    path.write_text(body)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert str(info.value).startswith(f"{path}:{line}:")
    assert fragment in str(info.value)


def test_load_config_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"game": "minesweeper", "seeds": [0], "trials_per_seed": 2}))
    assert load_config(path).trials_per_seed == 2
    path.write_text('{"game": "minesweeper",\n "seeds": [0,]}')
    with pytest.raises(ConfigError, match=r"c\.json:2:"):
        load_config(path)


# -- experiments --------------------------------------------------------------------


def test_experiment_256_playthroughs(tmp_path):
    cfg = RunConfig("frozen_lake", list(range(32)), trials_per_seed=8, workers=4, temperature=0.0)
    res = run_experiment(cfg, tmp_path, Gateway(scripted_cel_backend("frozen_lake")))
    assert res.playthroughs == 256 and res.successes == 256 and res.aggregate == 1.0
    assert len(res.series) == 7 and res.reflections == 8 * 6
    assert sorted({(r.trial, r.episode) for r in res.records}) == [(t, k) for t in range(8) for k in range(1, 33)]
    agg, series = recompute_from_logs(tmp_path, cfg.block_size)
    assert agg == res.aggregate and series == res.series


def test_experiment_reads_config_file_and_backend_mode(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('game = "sokoban"\nseeds = [0, 1]\ntrials_per_seed = 2\n[backend]\nmode = "scripted:oracle"\n')
    res = run_experiment(path, tmp_path / "out")
    assert res.aggregate == 1.0 and res.playthroughs == 4


def test_unknown_backend_mode():
    with pytest.raises(ConfigError, match="unknown backend"):
        harness.make_gateway(small_config(), "telepathy")
    with pytest.raises(ConfigError, match="store"):
        harness.make_gateway(small_config(), "replay")


def test_record_replay_experiment_is_byte_identical(tmp_path):
    cfg = small_config(trials_per_seed=2, workers=2, temperature=0.7)
    rec = run_experiment(cfg, tmp_path / "rec", Gateway(RecordingBackend(random_cel_backend(5, 0.1), tmp_path / "store")))
    rep = run_experiment(cfg, tmp_path / "rep", Gateway(ReplayBackend(tmp_path / "store")))
    assert rec.to_dict() == rep.to_dict()
    emit_report({"run": rec}, tmp_path / "rec")
    emit_report({"run": rep}, tmp_path / "rep")
    for rel in ["report.csv", "curves.svg", "episodes.jsonl", "result.json"] + [
        f"trials/trial-00{t}/{f}" for t in (0, 1) for f in ("transcript.jsonl", "knowledge/knowledge.jsonl")
    ]:
        assert (tmp_path / "rec" / rel).read_bytes() == (tmp_path / "rep" / rel).read_bytes(), rel
    # a changed prompt (different seeds) misses the store
    with pytest.raises(Exception) as info:
        run_experiment(small_config(seeds=[7]), tmp_path / "miss", Gateway(ReplayBackend(tmp_path / "store")))
    assert isinstance(info.value.__cause__, ReplayMiss)


# -- reports ------------------------------------------------------------------------


def _result(name, outcomes, boundaries=(3,), block=3):
    return RunResult.from_records({"name": name, "block_size": block}, records(outcomes), block, 1, list(boundaries))


def test_emit_report_files(tmp_path):
    paths = emit_report({"full": _result("a", [1, 0, 1, 1, 1, 0]), "no_rules": _result("b", [0, 0, 1, 0, 0, 0])}, tmp_path)
    rows = list(csv.reader(paths["csv"].open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1:] == [
        ["full", "0", "1", "3", "3", "2", "0.666667"],
        ["full", "1", "4", "6", "3", "2", "0.666667"],
        ["no_rules", "0", "1", "3", "3", "1", "0.333333"],
        ["no_rules", "1", "4", "6", "3", "0", "0.000000"],
    ]
    lines = paths["jsonl"].read_text().splitlines()
    assert len(lines) == 12 and json.loads(lines[0])["label"] == "full"
    svg = paths["svg"].read_text()
    assert svg.startswith("<?xml") and "full" in svg and "no_rules" in svg and "Episode" in svg
    # deterministic output
    again = emit_report({"full": _result("a", [1, 0, 1, 1, 1, 0]), "no_rules": _result("b", [0, 0, 1, 0, 0, 0])}, tmp_path / "2")
    assert again["svg"].read_bytes() == paths["svg"].read_bytes()


def test_emit_report_rejects_empty(tmp_path):
    with pytest.raises(ReportError):
        emit_report({}, tmp_path)
    empty = RunResult({"name": "x"}, [], [], 0.0)
    with pytest.raises(ReportError):
        emit_report([empty], tmp_path / "x")
    assert not (tmp_path / "x").exists()


# -- generalization -------------------------------------------------------------------


@pytest.fixture
def trained(tmp_path):
    cfg = small_config("frozen_lake", seeds=list(range(10)), trials_per_seed=1)
    run_experiment(cfg, tmp_path / "trained", Gateway(scripted_cel_backend("frozen_lake")))
    return tmp_path / "trained"


def test_intra_game_generalization(trained, tmp_path):
    report = run_generalization(
        trained, "frozen_lake", range(100, 105), tmp_path / "gen", gateway=Gateway(scripted_cel_backend("frozen_lake"))
    )
    assert [r.formatted for r in report.rows] == ["100.0", "100.0 [+0.0]"]
    assert (tmp_path / "gen" / "comparison.csv").exists()
    store = KnowledgeStore(tmp_path / "gen" / "intra" / "trials" / "trial-000" / "knowledge")
    assert store.latest().source.startswith("import:") and store.reflections() == []
    trained_rules = KnowledgeStore(trained / "trials" / "trial-000" / "knowledge").latest().rulebook.text
    assert store.latest().rulebook.text == trained_rules


def test_inter_game_generalization(trained, tmp_path):
    report = run_generalization(
        trained, "sokoban", range(5), tmp_path / "gen", gateway=Gateway(scripted_cel_backend("sokoban"))
    )
    assert [r.label for r in report.rows] == ["zero-shot w/ rules on sokoban", "frozen_lake-trained on sokoban"]
    assert report.rows[1].formatted == "100.0 (+0.0)"
    transfer = RunConfig.from_dict(json.loads((tmp_path / "gen" / "transfer" / "config.json").read_text()))
    assert transfer.game == "sokoban" and transfer.max_steps_per_episode == 50 and transfer.ablation_mode == "full"


def test_generalization_needs_a_trained_run(tmp_path):
    with pytest.raises(MissingSnapshot):
        run_generalization(tmp_path, "sokoban", [0], tmp_path / "g", gateway=Gateway(scripted_cel_backend("sokoban")))
