"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""
import json
import sys
import time
from pathlib import Path

import httpx
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import bruteforce  # noqa: E402
from celagent.agent import Mode, SelectionReason, run_episode  # noqa: E402
from celagent.agent.runner import run_training_run  # noqa: E402
from celagent.config import RunConfig  # noqa: E402
from celagent.env import (  # noqa: E402
    TerminationReason,
    generate_frozenlake,
    generate_minesweeper,
    generate_sokoban,
    legal_actions,
    reset,
    reveal,
    step,
)
from celagent.gateway import (  # noqa: E402
    Gateway,
    RecordingBackend,
    RemoteBackend,
    ReplayBackend,
    RequestTag,
    ScriptedBackend,
)
from celagent.harness import emit_report, format_change, format_gain, recompute_from_logs, run_experiment  # noqa: E402
from celagent.knowledge import KnowledgeStore, init_tabula_rasa  # noqa: E402
from celagent.oracles import bfs_frozenlake, bfs_sokoban, random_cel_backend, scripted_cel_backend  # noqa: E402
from celagent.results import EpisodeRecord, aggregate  # noqa: E402
from celagent.rng import SeededRng  # noqa: E402

GAMES = ("minesweeper", "frozen_lake", "sokoban")
LINES: list[str] = []


def report(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def oracle_gateway(game):
    return Gateway(scripted_cel_backend(game))


# 1 ---------------------------------------------------------------------------------


def test_criterion_01_minesweeper_vs_brute_force():
    t0 = time.perf_counter()
    mismatches = reveals = 0
    for seed in range(1000):
        board = generate_minesweeper(seed)
        if [list(r) for r in board.adjacency] != bruteforce.adjacency(board.rows, board.cols, board.mines):
            mismatches += 1
        for cell in [(r, c) for r in range(board.rows) for c in range(board.cols) if (r, c) not in board.mines]:
            reveals += 1
            opened, _ = reveal(board, cell)
            if set(opened.revealed) != bruteforce.reveal_region(board.rows, board.cols, board.mines, cell):
                mismatches += 1
    elapsed = time.perf_counter() - t0
    report(
        1,
        mismatches == 0 and elapsed < 5.0,
        f"1000 boards, {reveals} flood fills, {mismatches} mismatches, {elapsed:.2f}s (< 5s)",
    )


# 2 ---------------------------------------------------------------------------------


def test_criterion_02_solvability():
    violations = 0
    for seed in range(1000):
        lake = generate_frozenlake(seed)
        if len(lake.holes) != 6 or bfs_frozenlake(lake) is None:
            violations += 1
        if not bruteforce.grid_reachable(lake.rows, lake.cols, lake.holes, lake.start, lake.goal):
            violations += 1
        if bfs_sokoban(generate_sokoban(seed)) is None:
            violations += 1
    report(2, violations == 0, f"1000 Frozen Lake (6 holes, reachable) + 1000 Sokoban (solvable): {violations} violations")


# 3 ---------------------------------------------------------------------------------


def test_criterion_03_sparse_reward():
    violations = episodes = 0
    for game in GAMES:
        for seed in range(300):
            rng = SeededRng(seed, 99)
            state = reset(game, seed)
            rewards = []
            while not state.terminal and state.step_index < 60:
                tr = step(state, rng.choice(legal_actions(state)))
                rewards.append(tr.reward)
                state = tr.state_after
            episodes += 1
            nonterminal, last = rewards[:-1], rewards[-1]
            success = state.terminal and state.outcome.success
            if any(r != 0 for r in nonterminal) or last != (1 if success else 0) or sum(rewards) not in (0, 1):
                violations += 1
    # oracle episodes end in success and return exactly 1
    for game in GAMES:
        backend = scripted_cel_backend(game)
        obs = [backend.oracle.observe] if hasattr(backend.oracle, "observe") else []
        for seed in range(20):
            res = run_episode(reset(game, seed), init_tabula_rasa(game), "full", Gateway(backend), observers=obs)
            rewards = [s.reward for s in res.trajectory.steps]
            episodes += 1
            if rewards[-1] != 1 or sum(rewards) != 1 or res.outcome.return_value != 1:
                violations += 1
    report(3, violations == 0, f"{episodes} episodes, {violations} reward-law violations")


# 4 ---------------------------------------------------------------------------------


def test_criterion_04_oracle_pipeline(tmp_path):
    t0 = time.perf_counter()
    rates = {}
    for game in GAMES:
        cfg = RunConfig(game, list(range(32)), name=f"{game}-oracle", trials_per_seed=8, workers=8, temperature=0.0)
        res = run_experiment(cfg, tmp_path / game, oracle_gateway(game))
        rates[game] = (res.successes, res.playthroughs)
    elapsed = time.perf_counter() - t0
    ok = all(s == p == 256 for s, p in rates.values()) and elapsed < 60
    detail = ", ".join(f"{g} {s}/{p}" for g, (s, p) in rates.items())
    report(4, ok, f"{detail}; {elapsed:.1f}s (< 60s), scripted backends, no network")


# 5 ---------------------------------------------------------------------------------


def test_criterion_05_cadence(tmp_path):
    counts = {}
    for mode in ("full", "rules_once", "no_rules"):
        cfg = RunConfig("frozen_lake", list(range(20)), trials_per_seed=1, reflection_frequency=5, ablation_mode=mode)
        gw = oracle_gateway("frozen_lake")
        run_training_run(cfg, gw, tmp_path / mode)
        by_gateway = len(gw.calls_for(tag=RequestTag.RULE_INDUCTION))
        by_commits = len(KnowledgeStore(tmp_path / mode / "knowledge").reflections())
        counts[mode] = (by_gateway, by_commits)
    expected = {"full": 4, "rules_once": 1, "no_rules": 0}
    ok = all(counts[m] == (n, n) for m, n in expected.items())
    report(5, ok, ", ".join(f"{m}={counts[m][1]} (gateway {counts[m][0]})" for m in expected))


# 6 ---------------------------------------------------------------------------------


def _call_law(game, mode, seeds):
    """Check call sequences against legal-action counts recomputed from the environment."""
    steps = violations = 0
    for seed in seeds:
        backend = scripted_cel_backend(game)
        gw = Gateway(backend)
        obs = [backend.oracle.observe] if hasattr(backend.oracle, "observe") else []
        res = run_episode(reset(game, seed), init_tabula_rasa(game), mode, gw, observers=obs)
        tags = [c.tag for c in gw.calls]
        state = reset(game, seed)
        expected = []
        for rec in res.trajectory.steps:
            if mode is Mode.ACTION_ONLY:
                expected.append(RequestTag.ACTION_ONLY)
            else:
                expected += [RequestTag.VALUE] + [RequestTag.WORLD_MODEL] * len(legal_actions(state))
            (action,) = [a for a in legal_actions(state) if a.canonical_text == rec.action]
            state = step(state, action).state_after
            steps += 1
        if tags != expected:
            violations += 1
    return steps, violations


def test_criterion_06_call_count_law():
    total_steps = total_bad = 0
    for game in GAMES:
        for mode in (Mode.FULL, Mode.ACTION_ONLY):
            s, v = _call_law(game, mode, range(8))
            total_steps += s
            total_bad += v
    report(
        6,
        total_bad == 0,
        f"{total_steps} decision steps: 1 value + |legal| world-model calls (full), 1 call (action_only); "
        f"{total_bad} violating episodes",
    )


# 7 ---------------------------------------------------------------------------------


def test_criterion_07_replay_determinism(tmp_path):
    cfg = RunConfig("frozen_lake", [0, 1, 2, 3, 4], name="replay", trials_per_seed=1, temperature=0.7)
    store = tmp_path / "store"
    rec = run_experiment(cfg, tmp_path / "rec", Gateway(RecordingBackend(random_cel_backend(11, 0.1), store)))
    rep_gw = Gateway(ReplayBackend(store))
    rep = run_experiment(cfg, tmp_path / "rep", rep_gw)
    emit_report({"replay": rec}, tmp_path / "rec")
    emit_report({"replay": rep}, tmp_path / "rep")
    files = ["trials/trial-000/transcript.jsonl", "trials/trial-000/knowledge/knowledge.jsonl", "report.csv", "curves.svg"]
    same = [(tmp_path / "rec" / f).read_bytes() == (tmp_path / "rep" / f).read_bytes() for f in files]
    all_hits = all(c.cache_hit for c in rep_gw.calls)
    report(7, all(same) and all_hits, f"5-episode run replayed ({len(rep_gw.calls)} calls): {dict(zip(files, same))}")


# 8 ---------------------------------------------------------------------------------


def test_criterion_08_statistics():
    gain = format_gain(53.5, 25.8)
    change = format_change(50.4, 53.5)
    recs = [EpisodeRecord(i // 32, i % 32 + 1, i % 32, i < 138, 1, "x", 0, 0) for i in range(256)]
    agg = round(aggregate(recs), 3)
    ok = gain == "53.5 (+27.7)" and change == "50.4 [-3.1]" and agg == 0.539
    report(8, ok, f'"{gain}", "{change}", 138/256 -> {agg}')


# 9 ---------------------------------------------------------------------------------


def test_criterion_09_parser_robustness():
    from hypothesis import HealthCheck, given, settings, strategies as st

    fragments = st.sampled_from(
        [
            "<value score=5>ok</value>",
            "<value score=",
            '<predict action="Up" score=9>s ; r</predict>',
            '<predict action="Up" score=9>s ; r</predict><predict action="Up" score=1>dup</predict>',
            '<predict action="(9, 9)" score=7>illegal</predict>',
            "<choose>Nowhere</choose>",
            "<choose>(99, 99)</choose>",
            "<choose>",
            "</predict></value>",
            "score=abc",
        ]
    )
    stats = {"episodes": 0, "fallbacks": 0, "budget_stops": 0}

    @settings(max_examples=150, deadline=None, derandomize=True, suppress_health_check=list(HealthCheck))
    @given(st.sampled_from(GAMES), st.integers(0, 999), st.lists(st.lists(fragments, max_size=4), min_size=1, max_size=8))
    def fuzz(game, seed, script):
        answers = ["".join(parts) for parts in script]
        counter = iter(range(10**9))
        gw = Gateway(ScriptedBackend(lambda p: answers[next(counter) % len(answers)]))
        res = run_episode(reset(game, seed), init_tabula_rasa(game), "full", gw, rng=SeededRng(seed))
        stats["episodes"] += 1
        for d in res.decisions:
            if d.selection_reason is SelectionReason.FALLBACK_PARSE_FAILURE:
                stats["fallbacks"] += 1
                assert d.issues
        assert res.outcome is not None
        if res.outcome.termination_reason is TerminationReason.PARSE_FALLBACK_LIMIT:
            stats["budget_stops"] += 1
            assert not res.outcome.success and res.outcome.return_value == 0
            assert [d.selection_reason for d in res.decisions[-3:]] == [SelectionReason.FALLBACK_PARSE_FAILURE] * 3

    fuzz()
    # pure garbage must hit the budget exactly after three picks
    gw = Gateway(ScriptedBackend(lambda p: "<value score=<predict"))
    res = run_episode(reset("sokoban", 0), init_tabula_rasa("sokoban"), "full", gw)
    budget_ok = res.outcome.termination_reason is TerminationReason.PARSE_FALLBACK_LIMIT and len(res.decisions) == 3
    report(
        9,
        budget_ok and stats["fallbacks"] > 0 and stats["budget_stops"] > 0,
        f"{stats['episodes']} fuzzed episodes, no crash; {stats['fallbacks']} fallbacks recorded, "
        f"{stats['budget_stops']} budget terminations",
    )


# 10 --------------------------------------------------------------------------------


def test_criterion_10_protocol_against_any_endpoint(tmp_path):
    """Trained-model success rates need a live policy model under RL; not reproduced here.

    What is checked instead: the 256-playthrough protocol (32 seeds x 8
    trials) runs end to end through the OpenAI-compatible HTTP client,
    against a mock endpoint that answers from the oracle.
    """
    handler = scripted_cel_backend("frozen_lake").handler
    served = []

    def endpoint(request):
        body = json.loads(request.content)
        served.append(body["model"])
        text = handler(body["messages"][-1]["content"])
        return httpx.Response(200, json={"choices": [{"message": {"content": text}}]})

    remote = RemoteBackend(
        "http://policy.invalid/v1", "any-model", client=httpx.Client(transport=httpx.MockTransport(endpoint))
    )
    cfg = RunConfig("frozen_lake", list(range(32)), name="endpoint", trials_per_seed=8, workers=8, temperature=0.0)
    res = run_experiment(cfg, tmp_path, Gateway(remote, max_concurrency=8))
    agg, _ = recompute_from_logs(tmp_path, cfg.block_size)
    ok = res.playthroughs == 256 and agg == res.aggregate and set(served) == {"any-model"}
    report(
        10,
        ok,
        f"trained-model success rates not reproduced (they need a live policy model under RL); "
        f"256-playthrough protocol ran over HTTP ({len(served)} requests, success {res.aggregate:.3f}); "
        f"criteria 1-9 are the verification surface",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
