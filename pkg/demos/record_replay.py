"""Record a short run against a noisy random backend, then replay it offline.

The replayed transcript matches the recorded one byte for byte.
"""
import logging
import tempfile
from pathlib import Path

from celagent.config import RunConfig
from celagent.gateway import Gateway, RecordingBackend, ReplayBackend
from celagent.harness import run_experiment
from celagent.oracles import random_cel_backend

if __name__ == "__main__":
    logging.getLogger("celagent").setLevel(logging.ERROR)
    root = Path(tempfile.mkdtemp(prefix="celagent-replay-"))
    cfg = RunConfig("sokoban", [0, 1, 2, 3, 4], trials_per_seed=1, temperature=0.7)
    rec = run_experiment(cfg, root / "rec", Gateway(RecordingBackend(random_cel_backend(3, 0.2), root / "store")))
    gw = Gateway(ReplayBackend(root / "store"))
    rep = run_experiment(cfg, root / "rep", gw)
    rel = "trials/trial-000/transcript.jsonl"
    same = (root / "rec" / rel).read_bytes() == (root / "rep" / rel).read_bytes()
    print(f"recorded success {rec.aggregate:.3f}, replayed {rep.aggregate:.3f}")
    print(f"{len(gw.calls)} replayed calls, all cache hits: {all(c.cache_hit for c in gw.calls)}")
    print(f"transcripts identical: {same}")
    print(f"store: {root / 'store'}")
