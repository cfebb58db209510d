from .core import (
    CallSettings,
    DecisionRecord,
    EpisodeResult,
    Mode,
    ReflectionOutput,
    ReflectionRecord,
    SelectionReason,
    TransitionPrediction,
    ValueAssessment,
    act_direct,
    assess_value,
    induce_rules,
    predict_transitions,
    reflect,
    run_episode,
    select_action,
    summarize_playbook,
)
from .prompts import (
    build_action_only_prompt,
    build_decision_prompt,
    build_reflection_prompt,
    build_world_model_prompt,
)
