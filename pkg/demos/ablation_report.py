"""Compare reflection modes on Frozen Lake and write report.csv and curves.svg."""
import logging
import sys
import tempfile
from pathlib import Path

from celagent.config import RunConfig
from celagent.gateway import Gateway
from celagent.harness import emit_report, run_experiment
from celagent.oracles import random_cel_backend

if __name__ == "__main__":
    logging.getLogger("celagent").setLevel(logging.ERROR)
    out = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="celagent-ablation-"))
    results = {}
    for mode in ("full", "rules_once", "no_rules", "action_only"):
        cfg = RunConfig("frozen_lake", list(range(20)), name=mode, trials_per_seed=2, ablation_mode=mode)
        # a random policy will not learn; this shows the plumbing, not a result
        results[mode] = run_experiment(cfg, out / mode, Gateway(random_cel_backend(1, 0.05)))
        print(f"{mode:12s} success {results[mode].aggregate:.3f}  reflections {results[mode].reflections}")
    for kind, path in emit_report(results, out / "report").items():
        print(f"{kind}: {path}")
