"""Strict parsing of tagged model output.

Every parser is total: malformed input yields ``None`` fields plus a list of
issue strings, never an exception.  When a block appears more than once the
last complete occurrence wins.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

SCORE_MIN, SCORE_MAX = 0.0, 10.0

_SCORE_RE = re.compile(r"""score\s*=\s*["']?\s*([-+]?\d+(?:\.\d+)?)\s*["']?(?=[\s>/]|$)""")
_ACTION_ATTR_RE = re.compile(r"""action\s*=\s*(?:"([^"]*)"|'([^']*)')""")


def _blocks(text: str, tag: str) -> list[re.Match]:
    return list(re.finditer(rf"<{tag}\b([^>]*)>(.*?)</{tag}\s*>", text, re.S | re.I))


def strip_blocks(text: str, *tags: str) -> str:
    for tag in tags:
        text = re.sub(rf"<{tag}\b[^>]*>.*?</{tag}\s*>", "", text, flags=re.S | re.I)
    return text.strip()


def parse_score(attrs: str, issues: list[str]) -> float | None:
    m = _SCORE_RE.search(attrs)
    if m is None:
        issues.append("missing or non-numeric score")
        return None
    score = float(m.group(1))
    if not SCORE_MIN <= score <= SCORE_MAX:
        log.warning("score %s outside [0, 10]; clamped", score)
        issues.append(f"score {score:g} clamped")
        score = min(max(score, SCORE_MIN), SCORE_MAX)
    return score


@dataclass
class ParsedValue:
    score: float | None
    assessment: str | None
    trace: str
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.score is not None


def parse_value(text: str) -> ParsedValue:
    issues: list[str] = []
    blocks = _blocks(text, "value")
    if not blocks:
        return ParsedValue(None, None, text.strip(), ["no <value> block"])
    if len(blocks) > 1:
        issues.append("duplicate <value> blocks")
    m = blocks[-1]
    score = parse_score(m.group(1), issues)
    return ParsedValue(score, m.group(2).strip(), strip_blocks(text, "value", "predict", "choose"), issues)


@dataclass
class ParsedPrediction:
    action_text: str
    score: float | None
    predicted_state: str
    predicted_reward: str


def parse_predictions(text: str, issues: list[str] | None = None) -> list[ParsedPrediction]:
    """All ``<predict>`` blocks in order; blocks without an action attribute are dropped."""
    issues = issues if issues is not None else []
    out = []
    for m in _blocks(text, "predict"):
        am = _ACTION_ATTR_RE.search(m.group(1))
        if am is None:
            issues.append("<predict> without action attribute")
            continue
        body = m.group(2).strip()
        state, sep, reward = body.rpartition(";")
        if not sep:
            state, reward = body, ""
        out.append(
            ParsedPrediction(
                (am.group(1) if am.group(1) is not None else am.group(2)).strip(),
                parse_score(m.group(1), issues),
                state.strip(),
                reward.strip(),
            )
        )
    return out


def parse_choose(text: str) -> str | None:
    blocks = _blocks(text, "choose")
    return blocks[-1].group(2).strip() if blocks else None


def parse_block(text: str, tag: str) -> tuple[str | None, str]:
    """``(body, reasoning trace)`` for a ``<rules>`` or ``<playbook>`` answer."""
    blocks = _blocks(text, tag)
    body = blocks[-1].group(2).strip() if blocks else None
    return body, strip_blocks(text, tag)
