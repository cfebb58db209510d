"""The decision and reflection cycle.

In-episode: assess the current state (value call), look one step ahead on
every legal action (one world-model call each), and commit to the action
with the most favourable predicted outcome.  After episodes: rewrite the
rulebook from trajectories and the playbook from trajectories plus outcomes.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

from ..env.core import (
    DEFAULT_STEP_LIMITS,
    Action,
    EpisodeOutcome,
    GameState,
    TerminationReason,
    Trajectory,
    append_step,
    end_episode,
    legal_actions,
    parse_action,
    step,
)
from ..gateway import Gateway, GenerationRequest, RequestTag
from ..knowledge import KnowledgeSnapshot, KnowledgeStore
from ..rng import SeededRng
from .parsing import parse_block, parse_choose, parse_predictions, parse_value, strip_blocks
from .prompts import (
    build_action_only_prompt,
    build_decision_prompt,
    build_reflection_prompt,
    build_world_model_prompt,
)

log = logging.getLogger(__name__)


class Mode(str, enum.Enum):
    FULL = "full"
    NO_RULES = "no_rules"
    RULES_ONCE = "rules_once"
    ACTION_ONLY = "action_only"
    ZERO_SHOT = "zero_shot"

    def __str__(self) -> str:
        return self.value


class SelectionReason(str, enum.Enum):
    MAX_DESIRABILITY = "max_desirability"
    TIE_BREAK_CANONICAL = "tie_break_canonical"
    MODEL_CHOICE = "model_choice"
    FALLBACK_PARSE_FAILURE = "fallback_parse_failure"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CallSettings:
    max_tokens: int = 8192
    temperature: float = 0.0
    session: str = ""
    context_budget: int | None = None

    def request(self, prompt: str, tag: RequestTag) -> GenerationRequest:
        return GenerationRequest(prompt, tag, self.max_tokens, self.temperature, (), self.session)


@dataclass(frozen=True)
class ValueAssessment:
    reasoning_trace: str
    assessment_text: str | None
    parsed_score: float | None
    proposed_action: str | None = None
    issues: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "reasoning_trace": self.reasoning_trace,
            "assessment": self.assessment_text,
            "score": self.parsed_score,
            "proposed_action": self.proposed_action,
            "issues": list(self.issues),
        }


@dataclass(frozen=True)
class TransitionPrediction:
    action: Action
    reasoning_trace: str
    predicted_state: str | None
    predicted_reward: str | None
    desirability: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "action": self.action.canonical_text,
            "reasoning_trace": self.reasoning_trace,
            "predicted_state": self.predicted_state,
            "predicted_reward": self.predicted_reward,
            "desirability": self.desirability,
        }


@dataclass(frozen=True)
class DecisionRecord:
    step_index: int
    chosen: Action
    selection_reason: SelectionReason
    value: ValueAssessment | None = None
    predictions: tuple[TransitionPrediction, ...] = ()
    issues: tuple[str, ...] = ()
    knowledge_version: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "step_index": self.step_index,
            "chosen": self.chosen.canonical_text,
            "selection_reason": self.selection_reason.value,
            "value": self.value.to_dict() if self.value else None,
            "predictions": [p.to_dict() for p in self.predictions],
            "issues": list(self.issues),
            "knowledge_version": self.knowledge_version,
        }


def _match_legal(text: str | None, legal: Sequence[Action]) -> Action | None:
    if not text or not legal:
        return None
    action = parse_action(legal[0].game, text)
    return action if action is not None and action in legal else None


def assess_value(
    observation: str,
    legal: Sequence[Action],
    rulebook: str,
    playbook: str,
    gateway: Gateway,
    settings: CallSettings = CallSettings(),
) -> ValueAssessment:
    """Value call on the current state; retried once if the value block is unusable."""
    prompt = build_decision_prompt(observation, legal, rulebook, playbook)
    request = settings.request(prompt, RequestTag.VALUE)
    issues: list[str] = []
    for attempt in range(2):
        text = gateway.generate(request).text
        parsed = parse_value(text)
        issues.extend(parsed.issues)
        if parsed.ok:
            break
        log.info("value parse failed (attempt %d): %s", attempt + 1, "; ".join(parsed.issues))
    else:
        issues.append("value parse failed after retry")
    proposed = _match_legal(parse_choose(text), legal)
    return ValueAssessment(
        parsed.trace,
        parsed.assessment,
        parsed.score,
        proposed.canonical_text if proposed else None,
        tuple(issues),
    )


def predict_transitions(
    observation: str,
    legal: Sequence[Action],
    rulebook: str,
    gateway: Gateway,
    settings: CallSettings = CallSettings(),
) -> list[TransitionPrediction]:
    """One world-model call per action, in canonical action order."""
    out = []
    for action in legal:
        text = gateway.generate(
            settings.request(build_world_model_prompt(observation, action, rulebook), RequestTag.WORLD_MODEL)
        ).text
        preds = [p for p in parse_predictions(text) if _match_legal(p.action_text, [action]) is not None]
        trace = text
        if preds:
            p = preds[-1]
            trace = strip_blocks(text, "predict")
            out.append(TransitionPrediction(action, trace, p.predicted_state, p.predicted_reward, p.score))
        else:
            out.append(TransitionPrediction(action, trace.strip(), None, None, None))
    return out


def select_action(
    legal: Sequence[Action],
    predictions: Sequence[TransitionPrediction],
    *,
    value: ValueAssessment | None = None,
    rng: SeededRng | None = None,
    step_index: int = 0,
    issues: Sequence[str] = (),
) -> DecisionRecord:
    """Highest parsed desirability wins, ties going to the earliest action in canonical order.

    Without any parsed desirability the value call's ``<choose>`` proposal is
    used if legal; failing that a legal action is drawn from ``rng``.
    """
    if not legal:
        raise ValueError("no legal actions")
    legal = list(legal)
    scores: dict[str, float] = {}
    for p in predictions:
        if p.desirability is not None and p.action in legal:
            scores[p.action.canonical_text] = p.desirability
    issues = list(issues)
    if scores:
        best = max(scores.values())
        winners = [a for a in legal if scores.get(a.canonical_text) == best]
        reason = SelectionReason.MAX_DESIRABILITY if len(winners) == 1 else SelectionReason.TIE_BREAK_CANONICAL
        chosen = winners[0]
    elif value is not None and value.proposed_action is not None:
        chosen = next(a for a in legal if a.canonical_text == value.proposed_action)
        reason = SelectionReason.MODEL_CHOICE
    else:
        chosen = (rng or SeededRng(0)).choice(legal)
        reason = SelectionReason.FALLBACK_PARSE_FAILURE
        issues.append("no usable prediction or choice; random legal action")
    return DecisionRecord(step_index, chosen, reason, value, tuple(predictions), tuple(issues))


def act_direct(
    observation: str,
    legal: Sequence[Action],
    gateway: Gateway,
    settings: CallSettings = CallSettings(),
    *,
    rng: SeededRng | None = None,
    step_index: int = 0,
) -> DecisionRecord:
    """Action-only ablation: one call, no value or world-model reasoning."""
    text = gateway.generate(
        settings.request(build_action_only_prompt(observation, legal), RequestTag.ACTION_ONLY)
    ).text
    chosen = _match_legal(parse_choose(text), legal)
    if chosen is not None:
        return DecisionRecord(step_index, chosen, SelectionReason.MODEL_CHOICE)
    fallback = (rng or SeededRng(0)).choice(list(legal))
    return DecisionRecord(
        step_index, fallback, SelectionReason.FALLBACK_PARSE_FAILURE, issues=("no legal <choose> action",)
    )


@dataclass(frozen=True)
class ReflectionOutput:
    trace: str
    text: str
    carried_forward: bool


def _reflect_block(prompt: str, tag: str, request_tag: RequestTag, prior: str, gateway, settings) -> ReflectionOutput:
    request = settings.request(prompt, request_tag)
    trace = ""
    for attempt in range(2):
        body, trace = parse_block(gateway.generate(request).text, tag)
        if body is not None:
            return ReflectionOutput(trace, body, False)
        log.info("<%s> block missing (attempt %d)", tag, attempt + 1)
    log.warning("reflection produced no <%s> block twice; keeping prior text", tag)
    return ReflectionOutput(trace, prior, True)


def induce_rules(
    trajectories: Sequence[Trajectory],
    prior_rulebook: str,
    gateway: Gateway,
    settings: CallSettings = CallSettings(),
) -> ReflectionOutput:
    prompt = build_reflection_prompt(trajectories, None, prior_rulebook, None, settings.context_budget)
    return _reflect_block(prompt, "rules", RequestTag.RULE_INDUCTION, prior_rulebook, gateway, settings)


def summarize_playbook(
    trajectories: Sequence[Trajectory],
    outcomes: Sequence[EpisodeOutcome],
    prior_playbook: str,
    gateway: Gateway,
    settings: CallSettings = CallSettings(),
) -> ReflectionOutput:
    prompt = build_reflection_prompt(trajectories, outcomes, None, prior_playbook, settings.context_budget)
    return _reflect_block(prompt, "playbook", RequestTag.PLAYBOOK, prior_playbook, gateway, settings)


@dataclass(frozen=True)
class ReflectionRecord:
    episode_range: tuple[int, int]
    rule_trace: str
    playbook_trace: str
    rulebook_version: int
    playbook_version: int
    outcomes: tuple[bool, ...]
    carried_forward: tuple[bool, bool] = (False, False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "episode_range": list(self.episode_range),
            "rule_trace": self.rule_trace,
            "playbook_trace": self.playbook_trace,
            "rulebook_version": self.rulebook_version,
            "playbook_version": self.playbook_version,
            "outcomes": list(self.outcomes),
            "carried_forward": list(self.carried_forward),
        }


def reflect(
    trajectories: Sequence[Trajectory],
    outcomes: Sequence[EpisodeOutcome],
    store: KnowledgeStore,
    gateway: Gateway,
    settings: CallSettings = CallSettings(),
) -> tuple[KnowledgeSnapshot, ReflectionRecord]:
    """Rule induction then playbook summarization over ``trajectories``; commits one new version."""
    prior = store.latest()
    rules = induce_rules(trajectories, prior.rulebook.text, gateway, settings)
    playbook = summarize_playbook(trajectories, outcomes, prior.playbook.text, gateway, settings)
    span = (trajectories[0].episode_index, trajectories[-1].episode_index)
    snap = store.commit_update(
        rules.text,
        playbook.text,
        (rules.trace, playbook.trace),
        span,
        carried_forward=(rules.carried_forward, playbook.carried_forward),
    )
    record = ReflectionRecord(
        span,
        rules.trace,
        playbook.trace,
        snap.rulebook.version,
        snap.playbook.version,
        tuple(o.success for o in outcomes),
        (rules.carried_forward, playbook.carried_forward),
    )
    return snap, record


@dataclass
class EpisodeResult:
    trajectory: Trajectory
    outcome: EpisodeOutcome
    decisions: list[DecisionRecord] = field(default_factory=list)


def run_episode(
    state: GameState,
    snapshot: KnowledgeSnapshot,
    mode: Mode | str,
    gateway: Gateway,
    *,
    episode_index: int = 1,
    step_limit: int | None = None,
    fallback_budget: int = 3,
    rng: SeededRng | None = None,
    settings: CallSettings = CallSettings(),
    observers: Sequence[Callable[[GameState], None]] = (),
) -> EpisodeResult:
    """Play one episode with knowledge held fixed throughout."""
    if state.terminal or state.step_index != 0:
        raise ValueError("run_episode needs a fresh reset state")
    mode = Mode(mode)
    rng = rng or SeededRng(0)
    limit = step_limit or DEFAULT_STEP_LIMITS[state.game]
    rules = "" if mode is Mode.NO_RULES else snapshot.rulebook.text
    playbook = snapshot.playbook.text
    trajectory = Trajectory(episode_index)
    decisions: list[DecisionRecord] = []
    consecutive_fallbacks = 0

    while not state.terminal:
        if state.step_index >= limit:
            state = end_episode(state, TerminationReason.STEP_LIMIT)
            break
        for observe in observers:
            observe(state)
        legal = legal_actions(state)
        obs = state.observation_text
        if mode is Mode.ACTION_ONLY:
            record = act_direct(obs, legal, gateway, settings, rng=rng, step_index=state.step_index)
        else:
            value = assess_value(obs, legal, rules, playbook, gateway, settings)
            predictions = predict_transitions(obs, legal, rules, gateway, settings)
            record = select_action(legal, predictions, value=value, rng=rng, step_index=state.step_index)
        record = replace(record, knowledge_version=snapshot.version)
        decisions.append(record)

        if record.selection_reason is SelectionReason.FALLBACK_PARSE_FAILURE:
            consecutive_fallbacks += 1
            if consecutive_fallbacks >= fallback_budget:
                state = end_episode(state, TerminationReason.PARSE_FALLBACK_LIMIT)
                break
        else:
            consecutive_fallbacks = 0

        transition = step(state, record.chosen)
        trajectory = append_step(trajectory, transition)
        state = transition.state_after

    if trajectory.terminal_observation is None:
        trajectory = replace(trajectory, terminal_observation=state.observation_text)
    return EpisodeResult(trajectory, state.outcome, decisions)
