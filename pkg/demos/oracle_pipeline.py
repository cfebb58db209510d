"""Drive the full agent loop with oracle backends: 32 seeds x 8 trials per game.

Nothing here talks to a network; success should be 100% everywhere.
"""
import sys
import tempfile
import time

from celagent.config import RunConfig
from celagent.gateway import Gateway
from celagent.harness import run_experiment
from celagent.oracles import scripted_cel_backend


def main(out):
    for game in ("minesweeper", "frozen_lake", "sokoban"):
        t0 = time.perf_counter()
        cfg = RunConfig(game, list(range(32)), trials_per_seed=8, workers=8, temperature=0.0)
        res = run_experiment(cfg, f"{out}/{game}", Gateway(scripted_cel_backend(game)))
        print(f"{game:12s} {res.successes}/{res.playthroughs}  reflections={res.reflections}  {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="celagent-oracle-"))
