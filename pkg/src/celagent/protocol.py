"""Prompt layout and tagged-output grammar shared by prompt builders, parsers and scripted backends.

Prompts are plain text: a title line followed by ``=== NAME ===`` sections.
Model output uses these tags (scores are numbers in [0, 10])::

    <value score=S>assessment of the current state</value>
    <predict action="A" score=S>predicted next state ; predicted reward</predict>
    <choose>A</choose>
    <rules>...</rules>
    <playbook>...</playbook>

Text outside the tags is kept as the reasoning trace.
"""
from __future__ import annotations

import re

TITLE_DECISION = "# Decision step"
TITLE_WORLD_MODEL = "# World model lookahead"
TITLE_ACTION_ONLY = "# Action selection"
TITLE_RULES = "# Rule induction"
TITLE_PLAYBOOK = "# Playbook summarization"
TITLE_REFLECTION = "# Rule induction and playbook summarization"

RULES = "LEARNED RULES"
PLAYBOOK = "STRATEGIC PLAYBOOK"
OBSERVATION = "CURRENT OBSERVATION"
CANDIDATES = "CANDIDATE ACTIONS"
CONSIDERED = "ACTION UNDER CONSIDERATION"
TRAJECTORIES = "TRAJECTORIES"
OUTCOMES = "OUTCOMES"
OUTPUT = "OUTPUT FORMAT"

TRUNCATION_MARKER = "[TRUNCATED: {n} earliest step(s) omitted to fit the context budget]"

_SECTION_RE = re.compile(r"^=== ([A-Z ]+) ===$", re.M)


def section(name: str, body: str) -> str:
    return f"=== {name} ===\n{body.rstrip()}\n"


def split_sections(prompt: str) -> dict[str, str]:
    """Map section name to body.  Later duplicates of a name are ignored."""
    out: dict[str, str] = {}
    marks = list(_SECTION_RE.finditer(prompt))
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(prompt)
        out.setdefault(m.group(1), prompt[m.end() + 1 : end].rstrip("\n"))
    return out


def prompt_title(prompt: str) -> str:
    return prompt.split("\n", 1)[0].strip()


def candidate_lines(body: str) -> list[str]:
    return [line[2:].strip() for line in body.splitlines() if line.startswith("- ")]


def format_value(score: float, text: str) -> str:
    return f"<value score={_num(score)}>{text}</value>"


def format_predict(action: str, score: float, state: str, reward: str) -> str:
    return f'<predict action="{action}" score={_num(score)}>{state} ; {reward}</predict>'


def format_choose(action: str) -> str:
    return f"<choose>{action}</choose>"


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:g}"
