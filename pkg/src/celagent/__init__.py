"""Language-model agent that plans with a text world model and learns rules and strategy by reflection."""

from .env import GameId, legal_actions, reset, step
from .gateway import Gateway, GenerationRequest, GenerationResponse
from .knowledge import KnowledgeStore, init_tabula_rasa, load_snapshot
from .config import RunConfig, load_config
from .results import RunResult

__version__ = "0.1.0"

__all__ = [
    "GameId",
    "Gateway",
    "GenerationRequest",
    "GenerationResponse",
    "KnowledgeStore",
    "RunConfig",
    "RunResult",
    "init_tabula_rasa",
    "legal_actions",
    "load_config",
    "load_snapshot",
    "reset",
    "step",
]
