import json
import subprocess
import sys

import pytest

from celagent.cli import main


def _config(tmp_path, body='game = "frozen_lake"\nseeds = [0, 1, 2]\ntrials_per_seed = 2\nreflection_frequency = 3\n'):
    path = tmp_path / "c.toml"
    path.write_text(body + '[backend]\nmode = "scripted:oracle"\n')
    return path


def test_run_curve_report(tmp_path, capsys):
    out = tmp_path / "exp"
    assert main(["run", str(_config(tmp_path)), "--out", str(out), "--report"]) == 0
    text = capsys.readouterr().out
    assert "6 playthroughs, 6 successes, success rate 1.000" in text
    assert (out / "report.csv").exists() and (out / "curves.svg").exists()

    assert main(["curve", str(out)]) == 0
    assert capsys.readouterr().out == "0\t1.000000\n"

    assert main(["report", str(out), str(out), "--labels", "a", "b", "--out", str(tmp_path / "rep")]) == 0
    assert "csv:" in capsys.readouterr().out
    assert (tmp_path / "rep" / "report.csv").read_text().count("\n") == 3


def test_run_with_record_then_replay(tmp_path, capsys):
    store = tmp_path / "store"
    body = (
        'game = "sokoban"\nseeds = [0, 1]\ntrials_per_seed = 1\n'
        f'[backend]\nmode = "record"\ninner = "scripted:random"\nstore = "{store}"\n'
    )
    cfg = tmp_path / "c.toml"
    cfg.write_text(body)
    assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b"), "--backend", "replay"]) == 0
    a = (tmp_path / "a" / "trials" / "trial-000" / "transcript.jsonl").read_bytes()
    b = (tmp_path / "b" / "trials" / "trial-000" / "transcript.jsonl").read_bytes()
    assert a == b


def test_kb_show_export_import(tmp_path, capsys):
    out = tmp_path / "exp"
    main(["run", str(_config(tmp_path)), "--out", str(out)])
    capsys.readouterr()
    run_dir = out / "trials" / "trial-000"
    assert main(["kb", "show", str(run_dir)]) == 0
    shown = capsys.readouterr().out
    assert "game frozen_lake  version 1  (reflection)" in shown and "--- playbook ---" in shown
    assert main(["kb", "show", str(run_dir), "--version", "0"]) == 0
    assert "version 0  (init)" in capsys.readouterr().out
    exported = tmp_path / "snap.json"
    assert main(["kb", "export", str(run_dir), str(exported)]) == 0
    assert json.loads(exported.read_text())["format"] == "celagent-knowledge/1"
    assert main(["kb", "import", str(exported), str(tmp_path / "newstore"), "--game", "sokoban"]) == 0
    assert "imported as version 1" in capsys.readouterr().out


def test_generalize(tmp_path, capsys):
    out = tmp_path / "exp"
    main(["run", str(_config(tmp_path)), "--out", str(out)])
    capsys.readouterr()
    args = ["generalize", str(out), "--game", "frozen_lake", "--seed-count", "3", "--trials", "1"]
    assert main(args + ["--backend", "scripted:oracle", "--out", str(tmp_path / "g")]) == 0
    assert "[+0.0]" in capsys.readouterr().out


@pytest.mark.parametrize(
    "game, seed, expected",
    [
        ("sokoban", 0, "Left Left Left Down Right Right"),
        ("frozen_lake", 0, "Down Down Down Down Right Right Right Right Down Right"),
    ],
)
def test_oracle_solve(capsys, game, seed, expected):
    assert main(["oracle", "solve", "--game", game, "--seed", str(seed)]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == expected


def test_oracle_solve_minesweeper(capsys):
    assert main(["oracle", "solve", "--game", "minesweeper", "--seed", "0"]) == 0
    moves = capsys.readouterr().out.splitlines()[-1]
    assert "(1, 1)" not in moves and moves.startswith("(0, 0)")


def test_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('game = "frozen_lake"\nseeds = [1]\nnope = 1\n')
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert f"{bad}:3:" in capsys.readouterr().err
    assert main(["kb", "show", str(tmp_path / "missing")]) == 2
    assert main(["run", str(_config(tmp_path)), "--out", str(tmp_path / "o"), "--backend", "warp"]) == 2


def test_live_backend_without_endpoint_is_reported(tmp_path, capsys, monkeypatch):
    for var in ("CELAGENT_MODEL", "OPENAI_MODEL"):
        monkeypatch.delenv(var, raising=False)
    cfg = tmp_path / "c.toml"
    cfg.write_text('game = "sokoban"\nseeds = [0]\n')
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "no model configured" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "celagent.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "generalize" in proc.stdout
