"""Prompt builders.  Output is byte-stable for identical inputs."""
from __future__ import annotations

from typing import Sequence

from .. import protocol as P
from ..env.core import Action, EpisodeOutcome, Trajectory
from ..texts import NO_RULES_MARKER

_PREAMBLE = (
    "You are playing a game presented as a text grid. You have not been told its rules; "
    "you only know the actions available to you. Rewards are sparse: +1 when the game is "
    "won, 0 otherwise."
)

_SCORE_NOTE = "S is a number from 0 (hopeless) to 10 (certain success). Write A exactly as listed."


def _rules_body(rulebook: str) -> str:
    return rulebook.strip() or NO_RULES_MARKER


def _candidates(actions: Sequence[Action | str]) -> str:
    return "\n".join(f"- {a}" for a in actions)


def build_decision_prompt(
    observation: str,
    legal_actions: Sequence[Action | str],
    rulebook: str,
    playbook: str,
) -> str:
    """Single-step decision template: assess the state, look ahead on every action, choose."""
    contract = "\n".join(
        [
            "Think step by step first. Then write, in this order:",
            "<value score=S>your assessment of the current state's long-term potential</value>",
            "one block per candidate action:",
            '<predict action="A" score=S>predicted next state ; predicted reward</predict>',
            "and finally:",
            "<choose>A</choose>",
            _SCORE_NOTE,
        ]
    )
    return "\n".join(
        [
            P.TITLE_DECISION,
            _PREAMBLE,
            "",
            P.section(P.RULES, _rules_body(rulebook)),
            P.section(P.PLAYBOOK, playbook.strip() or "(empty)"),
            P.section(P.OBSERVATION, observation),
            P.section(P.CANDIDATES, _candidates(legal_actions)),
            P.section(P.OUTPUT, contract),
        ]
    )


def build_world_model_prompt(observation: str, action: Action | str, rulebook: str) -> str:
    """One-action lookahead; conditioned on the rules only, never the playbook."""
    contract = "\n".join(
        [
            "Reason about what this action does, then write exactly one block:",
            f'<predict action="{action}" score=S>predicted next state ; predicted reward</predict>',
            "S rates how favourable the predicted outcome is, from 0 (disastrous) to 10 (wins the game).",
        ]
    )
    return "\n".join(
        [
            P.TITLE_WORLD_MODEL,
            _PREAMBLE + " Predict the immediate consequence of one action.",
            "",
            P.section(P.RULES, _rules_body(rulebook)),
            P.section(P.OBSERVATION, observation),
            P.section(P.CONSIDERED, str(action)),
            P.section(P.OUTPUT, contract),
        ]
    )


def build_action_only_prompt(observation: str, legal_actions: Sequence[Action | str]) -> str:
    return "\n".join(
        [
            P.TITLE_ACTION_ONLY,
            _PREAMBLE,
            "",
            P.section(P.OBSERVATION, observation),
            P.section(P.CANDIDATES, _candidates(legal_actions)),
            P.section(P.OUTPUT, "Reply with only <choose>A</choose>. Write A exactly as listed."),
        ]
    )


def _outcome_label(outcome: EpisodeOutcome) -> str:
    word = "success" if outcome.success else "failure"
    return f"{word} ({outcome.termination_reason}, {outcome.steps_taken} steps, return {outcome.return_value:g})"


def _step_block(t: int, observation: str, action: str, reward: int) -> str:
    return f"[t={t}] state:\n{observation.rstrip()}\naction: {action} -> reward {reward}\n"


def build_reflection_prompt(
    trajectories: Sequence[Trajectory],
    outcomes: Sequence[EpisodeOutcome] | None,
    rulebook: str | None,
    playbook: str | None,
    budget: int | None = None,
) -> str:
    """Reflection over one or more finished episodes.

    Passing only ``rulebook`` builds the rule-induction prompt, only
    ``playbook`` (with ``outcomes``) the playbook prompt, both the combined
    prompt.  When ``budget`` (characters) would be exceeded, the earliest
    steps are dropped first and replaced by a truncation marker; episode
    headers and outcomes are always kept.
    """
    if not trajectories:
        raise ValueError("reflection needs at least one trajectory")
    if rulebook is None and playbook is None:
        raise ValueError("pass a prior rulebook, a prior playbook, or both")
    if outcomes is not None and len(outcomes) != len(trajectories):
        raise ValueError("one outcome per trajectory")

    if playbook is None:
        title = P.TITLE_RULES
        intro = "Study these episodes and write an updated, more accurate set of rules describing how the game works."
        tags = ["<rules>the complete updated rule set</rules>"]
    elif rulebook is None:
        title = P.TITLE_PLAYBOOK
        intro = "Study these episodes and their outcomes and distil what worked and what failed into an updated strategic playbook."
        tags = ["<playbook>the complete updated playbook</playbook>"]
    else:
        title = P.TITLE_REFLECTION
        intro = "Study these episodes, update the rules of the game, and distil an updated strategic playbook."
        tags = ["<rules>the complete updated rule set</rules>", "<playbook>the complete updated playbook</playbook>"]

    head = [title, _PREAMBLE, intro, ""]
    if rulebook is not None:
        head.append(P.section(P.RULES, _rules_body(rulebook)))
    if playbook is not None:
        head.append(P.section(P.PLAYBOOK, playbook.strip() or "(empty)"))

    steps: list[tuple[int, str]] = []  # (episode position, block)
    for i, traj in enumerate(trajectories):
        for t, s in enumerate(traj.steps):
            steps.append((i, _step_block(t, s.observation, s.action, s.reward)))

    def render_trajectories(dropped: int) -> str:
        parts = []
        if dropped:
            parts.append(P.TRUNCATION_MARKER.format(n=dropped) + "\n")
        kept = steps[dropped:]
        for i, traj in enumerate(trajectories):
            label = f" ({_outcome_label(outcomes[i])})" if outcomes is not None else ""
            parts.append(f"--- Episode {traj.episode_index}{label} ---\n")
            parts.extend(block for pos, block in kept if pos == i)
            final = (traj.terminal_observation or "").rstrip()
            parts.append(f"[final] state:\n{final}\n")
        return "".join(parts)

    tail = []
    if outcomes is not None:
        tail.append(
            P.section(
                P.OUTCOMES,
                "\n".join(f"Episode {t.episode_index}: {_outcome_label(o)}" for t, o in zip(trajectories, outcomes)),
            )
        )
    tail.append(P.section(P.OUTPUT, "Think step by step first. Then write:\n" + "\n".join(tags)))

    def assemble(dropped: int) -> str:
        return "\n".join(head + [P.section(P.TRAJECTORIES, render_trajectories(dropped))] + tail)

    prompt = assemble(0)
    if budget is None or len(prompt) <= budget:
        return prompt
    # lengths shrink monotonically with drops; binary search the fewest drops that fit
    lo, hi = 1, len(steps)
    while lo < hi:
        mid = (lo + hi) // 2
        if len(assemble(mid)) <= budget:
            hi = mid
        else:
            lo = mid + 1
    return assemble(lo)
