"""Clue-driven stateful knowledge-graph exploration with an LLM backend.

Questions are decomposed into atomic clues, anchored to graph entities by
exact lexical match, and walked across the graph hop by hop while a
per-branch record keeps any clue from being mapped twice. Fully mapped
paths ground the answering prompt; everything else falls back to the
model's own knowledge.
"""

from .answerer import AnswerContext, answer, build_context
from .clues import Clue, ClueSet, ExplorationState, apply_variant
from .explorer import (
    Branch,
    ExplorationResult,
    ExploreConfig,
    explore_question,
    final_hop_shortcut,
    hop,
    prune,
)
from .gateway import (
    CallLedger,
    ChatRequest,
    ChatResponse,
    Gateway,
    HttpBackend,
    OracleBackend,
    ScriptedBackend,
)
from .kg import Graph, Triple, build_graph, load_graph
from .metrics import score_boolean, score_match
from .parsing import MappingVerdict, parse_clues, parse_verdicts
from .prompts import PromptSet
from .runner import QAItem, RunConfig, RunReport, merge_with_io, run

__version__ = "0.1.0"

__all__ = [
    "AnswerContext",
    "Branch",
    "CallLedger",
    "ChatRequest",
    "ChatResponse",
    "Clue",
    "ClueSet",
    "ExplorationResult",
    "ExplorationState",
    "ExploreConfig",
    "Gateway",
    "Graph",
    "HttpBackend",
    "MappingVerdict",
    "OracleBackend",
    "PromptSet",
    "QAItem",
    "RunConfig",
    "RunReport",
    "ScriptedBackend",
    "Triple",
    "answer",
    "apply_variant",
    "build_context",
    "build_graph",
    "explore_question",
    "final_hop_shortcut",
    "hop",
    "load_graph",
    "merge_with_io",
    "parse_clues",
    "parse_verdicts",
    "prune",
    "run",
    "score_boolean",
    "score_match",
]
