import logging

import pytest

from celagent.config import RunConfig
from celagent.gateway import Gateway
from celagent.oracles import random_cel_backend, scripted_cel_backend

GAMES = ("minesweeper", "frozen_lake", "sokoban")


@pytest.fixture(autouse=True)
def _quiet_clamp_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="celagent")


def oracle_gateway(game):
    return Gateway(scripted_cel_backend(game))


def random_gateway(seed=0, malformed_rate=0.0):
    return Gateway(random_cel_backend(seed, malformed_rate))


def small_config(game="frozen_lake", **kw):
    base = dict(game=game, seeds=[0, 1, 2, 3, 4], trials_per_seed=1, temperature=0.0)
    base.update(kw)
    return RunConfig(**base)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = list(getattr(mod, "LINES", []))
    seen = {line.split("criterion ")[1].split(":")[0] for line in lines}
    for rep in terminalreporter.stats.get("failed", []):
        name = rep.nodeid.rsplit("::", 1)[-1]
        if name.startswith("test_criterion_") and str(int(name[15:17])) not in seen:
            lines.append(f"[FAIL] criterion {int(name[15:17])}: raised before reporting ({name})")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
