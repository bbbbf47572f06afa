"""Agent-based simulation of information diffusion across platform architectures and feed policies."""

from platsim.domain import AgentTraits, Message, MessageTraits
from platsim.engine import Architecture, SimulationConfig, RunResult, run
from platsim.feed import BoundedFeed, FeedPolicy, InsertOutcome
from platsim.metrics import ConditionSummary, MessageOutcome, summarize
from platsim.stochastics import RandomSource

__version__ = "0.1.0"

__all__ = [
    "AgentTraits",
    "Architecture",
    "BoundedFeed",
    "ConditionSummary",
    "FeedPolicy",
    "InsertOutcome",
    "Message",
    "MessageOutcome",
    "MessageTraits",
    "RandomSource",
    "RunResult",
    "SimulationConfig",
    "run",
    "summarize",
]
