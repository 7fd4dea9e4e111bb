"""Agent-based content moderation: tools, retrieval, feedback, evaluation."""

from .core import (
    AgentDecision,
    GuidelineCitation,
    Label,
    Post,
    Tool,
    ToolTraceEvent,
    decision_to_dict,
    negate,
    validate_decision,
)
from .vector_index import (
    IndexedExample,
    SimilarPost,
    VectorIndex,
    cosine_similarity,
    l2_normalize,
)
from .agent import AgentConfig, AgentRuntime, decide, run_fallback
from .evalharness import EvalResult, f1_scores, run_ablation, run_eval, tool_stats

__all__ = [
    "AgentConfig",
    "AgentDecision",
    "AgentRuntime",
    "EvalResult",
    "GuidelineCitation",
    "IndexedExample",
    "Label",
    "Post",
    "SimilarPost",
    "Tool",
    "ToolTraceEvent",
    "VectorIndex",
    "cosine_similarity",
    "decide",
    "decision_to_dict",
    "f1_scores",
    "l2_normalize",
    "negate",
    "run_ablation",
    "run_eval",
    "run_fallback",
    "tool_stats",
    "validate_decision",
]
