"""Command line entry point: ``celagent {run,curve,generalize,report,kb,oracle}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .agent.runner import RunAborted
from .config import ConfigError, load_config
from .env import GameId, from_board, game_module, reset
from .gateway import GatewayError
from .knowledge import KnowledgeError, KnowledgeStore, export_snapshot, load_snapshot
from .oracles import bfs_frozenlake, bfs_sokoban, minesweeper_omniscient_policy


def _cmd_run(args) -> int:
    config = load_config(args.config)
    gateway = harness.make_gateway(config, args.backend) if args.backend else None
    result = harness.run_experiment(config, args.out, gateway)
    print(f"{result.playthroughs} playthroughs, {result.successes} successes, success rate {result.aggregate:.3f}")
    for block, frac in result.series:
        print(f"block {block}: {frac:.3f}")
    if args.report:
        harness.emit_report({config.name: result}, args.out)
    return 0


def _cmd_curve(args) -> int:
    result = harness.load_result(args.run_dir)
    block = args.block or int(result.config.get("block_size") or 1)
    for b, frac in harness.compute_curve(result.records, block):
        print(f"{b}\t{frac:.6f}")
    return 0


def _cmd_generalize(args) -> int:
    seeds = list(range(args.seed_start, args.seed_start + args.seed_count))
    report = harness.run_generalization(
        args.run_dir, args.game, seeds, args.out, backend_mode=args.backend, trials_per_seed=args.trials
    )
    sys.stdout.write(report.to_text())
    return 0


def _cmd_report(args) -> int:
    labels = args.labels or [Path(d).name for d in args.run_dirs]
    if len(labels) != len(args.run_dirs):
        raise SystemExit("--labels must match the number of run directories")
    results = {label: harness.load_result(d) for label, d in zip(labels, args.run_dirs)}
    for kind, path in harness.emit_report(results, args.out).items():
        print(f"{kind}: {path}")
    return 0


def _cmd_kb(args) -> int:
    if args.kb_command == "show":
        snap = load_snapshot(args.path, args.version)
        print(f"run {snap.run_id or '-'}  game {snap.game}  version {snap.version}  ({snap.source})")
        print("--- rules ---")
        print(snap.rulebook.text or "(empty)")
        print("--- playbook ---")
        print(snap.playbook.text)
    elif args.kb_command == "export":
        path = export_snapshot(load_snapshot(args.path, args.version), args.out)
        print(path)
    else:
        snap = load_snapshot(args.snapshot)
        game = GameId(args.game) if args.game else snap.game
        store = KnowledgeStore.create(args.store, game, args.run_id or "")
        new = store.import_snapshot(snap)
        print(f"imported as version {new.version} into {store.path}")
    return 0


def _cmd_oracle(args) -> int:
    state = reset(args.game, args.seed)
    print(state.observation_text, end="")
    game = GameId(args.game)
    if game is GameId.FROZEN_LAKE:
        plan = bfs_frozenlake(state.hidden)
    elif game is GameId.SOKOBAN:
        plan = bfs_sokoban(state.hidden)
    else:
        plan, board = [], state.hidden
        mod = game_module(game)
        while from_board(game, board).outcome is None:
            cell = minesweeper_omniscient_policy(board)
            plan.append(mod.format_action(cell))
            board = mod.apply(board, cell)
    if plan is None:
        print("unsolvable")
        return 1
    print(" ".join(plan) if plan else "(already solved)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="celagent", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", required=True, help="experiment directory (reused to resume)")
    r.add_argument("--backend", help="override backend mode: live|record|replay|scripted:<name>")
    r.add_argument("--report", action="store_true", help="also write report.csv/episodes.jsonl/curves.svg")
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("curve", help="print the success-rate series of a finished experiment")
    c.add_argument("run_dir")
    c.add_argument("--block", type=int)
    c.set_defaults(func=_cmd_curve)

    g = sub.add_parser("generalize", help="intra- or inter-game evaluation of a trained experiment")
    g.add_argument("run_dir")
    g.add_argument("--game", required=True, choices=[x.value for x in GameId])
    g.add_argument("--seed-start", type=int, default=1000)
    g.add_argument("--seed-count", type=int, default=32)
    g.add_argument("--trials", type=int)
    g.add_argument("--backend")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generalize)

    rp = sub.add_parser("report", help="CSV/JSONL/SVG for one or more experiments")
    rp.add_argument("run_dirs", nargs="+")
    rp.add_argument("--labels", nargs="+")
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=_cmd_report)

    kb = sub.add_parser("kb", help="inspect and transfer knowledge stores")
    kbs = kb.add_subparsers(dest="kb_command", required=True)
    show = kbs.add_parser("show")
    show.add_argument("path")
    show.add_argument("--version", type=int)
    exp = kbs.add_parser("export")
    exp.add_argument("path")
    exp.add_argument("out")
    exp.add_argument("--version", type=int)
    imp = kbs.add_parser("import")
    imp.add_argument("snapshot")
    imp.add_argument("store")
    imp.add_argument("--game", choices=[x.value for x in GameId])
    imp.add_argument("--run-id")
    kb.set_defaults(func=_cmd_kb)

    o = sub.add_parser("oracle", help="brute-force solutions")
    osub = o.add_subparsers(dest="oracle_command", required=True)
    solve = osub.add_parser("solve")
    solve.add_argument("--game", required=True, choices=[x.value for x in GameId])
    solve.add_argument("--seed", type=int, required=True)
    o.set_defaults(func=_cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, KnowledgeError, GatewayError, harness.ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunAborted as exc:
        print(f"error: {exc}\nrerun the same command to resume", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
