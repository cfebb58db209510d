"""Train on Frozen Lake, then reuse the knowledge on unseen seeds and on Sokoban."""
import tempfile
from pathlib import Path

from celagent.config import RunConfig
from celagent.gateway import Gateway
from celagent.harness import run_experiment, run_generalization
from celagent.oracles import scripted_cel_backend

if __name__ == "__main__":
    root = Path(tempfile.mkdtemp(prefix="celagent-gen-"))
    cfg = RunConfig("frozen_lake", list(range(10)), trials_per_seed=1)
    run_experiment(cfg, root / "trained", Gateway(scripted_cel_backend("frozen_lake")))
    intra = run_generalization(
        root / "trained", "frozen_lake", range(100, 110), root / "intra", gateway=Gateway(scripted_cel_backend("frozen_lake"))
    )
    print(intra.to_text())
    inter = run_generalization(
        root / "trained", "sokoban", range(10), root / "inter", gateway=Gateway(scripted_cel_backend("sokoban"))
    )
    print(inter.to_text())
