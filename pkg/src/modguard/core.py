"""Shared domain types: posts, labels, decisions, and the tool trace schema.

All types are immutable value objects and safe to share between concurrent
request handlers. The canonical external form of a decision is the flat
JSON produced by :func:`decision_to_dict`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from .errors import DecisionValidationError, EmptyText

MAX_RETRIES = 5


class Label(Enum):
    HATE = "hate"
    NOT_HATE = "not_hate"


def negate(label: Label) -> Label:
    """Return the opposite binary label (an involution)."""
    return Label.NOT_HATE if label is Label.HATE else Label.HATE


class Platform(Enum):
    REDDIT = "reddit"
    X = "x"
    META = "meta"
    OTHER = "other"


class Tool(Enum):
    CLASSIFIER = "classifier"
    SIMILAR_POSTS = "similar_posts"
    SLANG_DICTIONARY = "slang_dictionary"
    REASONING = "reasoning"
    GUIDELINES = "guidelines"


class GuidelineSource(Enum):
    REDDIT = "reddit"
    X = "x"
    META = "meta"
    UNESCO = "unesco"
    UN = "un"


@dataclass(frozen=True)
class Post:
    id: str
    text: str
    platform: Platform | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise EmptyText(f"post {self.id!r} has empty text")


@dataclass(frozen=True)
class ToolTraceEvent:
    """One tool invocation: name, timing, outcome, and a short digest."""

    tool: Tool
    started_at: float  # monotonic-clock seconds
    duration: float  # seconds
    outcome: str  # "ok" | "error"
    summary: str

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("trace duration must be non-negative")
        if self.outcome not in ("ok", "error"):
            raise ValueError(f"unknown outcome {self.outcome!r}")


@dataclass(frozen=True)
class GuidelineCitation:
    source: GuidelineSource
    title: str
    snippet: str

    def __post_init__(self):
        if not self.snippet:
            raise ValueError("citation snippet must be non-empty")


@dataclass(frozen=True)
class AgentDecision:
    post_id: str
    label: Label
    confidence: float
    explanation: str
    guideline_citations: tuple[GuidelineCitation, ...] = ()
    trace: tuple[ToolTraceEvent, ...] = ()
    retries_used: int = 0

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} out of [0, 1]")
        if not self.explanation:
            raise ValueError("explanation must be non-empty")
        if not (0 <= self.retries_used <= MAX_RETRIES):
            raise ValueError(f"retries_used {self.retries_used} out of [0, {MAX_RETRIES}]")


def validate_decision(
    raw: Mapping[str, Any],
    *,
    post_id: str | None = None,
    trace: tuple[ToolTraceEvent, ...] = (),
    guideline_citations: tuple[GuidelineCitation, ...] = (),
    retries_used: int = 0,
) -> AgentDecision:
    """Validate a raw decision map and build an :class:`AgentDecision`.

    Collects every violated field constraint into a single
    :class:`DecisionValidationError` rather than failing on the first one.
    ``post_id``, ``trace``, ``guideline_citations`` and ``retries_used`` may
    come from the map itself (full serialized form) or from keyword context
    (planner output carries only label/confidence/explanation).
    """
    problems: list[str] = []

    label: Label | None = None
    raw_label = raw.get("label")
    if raw_label is None:
        problems.append("missing_field:label")
    else:
        try:
            label = Label(raw_label) if not isinstance(raw_label, Label) else raw_label
        except ValueError:
            problems.append("unknown_label")

    confidence = raw.get("confidence")
    if confidence is None:
        problems.append("missing_field:confidence")
    elif not isinstance(confidence, (int, float)) or isinstance(confidence, bool):
        problems.append("out_of_range_confidence")
    elif not (0.0 <= float(confidence) <= 1.0):
        problems.append("out_of_range_confidence")

    explanation = raw.get("explanation")
    if explanation is None:
        problems.append("missing_field:explanation")
    elif not isinstance(explanation, str) or not explanation.strip():
        problems.append("empty_explanation")

    resolved_post_id = raw.get("post_id", post_id)
    if resolved_post_id is None:
        problems.append("missing_field:post_id")

    if "trace" in raw:
        trace = tuple(_trace_event_from_dict(e) for e in raw["trace"])
    if "guideline_citations" in raw:
        guideline_citations = tuple(
            _citation_from_dict(c) for c in raw["guideline_citations"]
        )
    retries = raw.get("retries_used", retries_used)
    if not isinstance(retries, int) or not (0 <= retries <= MAX_RETRIES):
        problems.append("out_of_range_retries")

    if problems:
        raise DecisionValidationError(problems)

    return AgentDecision(
        post_id=resolved_post_id,
        label=label,
        confidence=float(confidence),
        explanation=explanation,
        guideline_citations=guideline_citations,
        trace=trace,
        retries_used=retries,
    )


def _trace_event_from_dict(d: Mapping[str, Any]) -> ToolTraceEvent:
    return ToolTraceEvent(
        tool=Tool(d["tool"]),
        started_at=float(d["started_at"]),
        duration=float(d["duration"]),
        outcome=d["outcome"],
        summary=d["summary"],
    )


def _citation_from_dict(d: Mapping[str, Any]) -> GuidelineCitation:
    return GuidelineCitation(
        source=GuidelineSource(d["source"]), title=d["title"], snippet=d["snippet"]
    )


def trace_event_to_dict(event: ToolTraceEvent) -> dict[str, Any]:
    return {
        "tool": event.tool.value,
        "started_at": event.started_at,
        "duration": event.duration,
        "outcome": event.outcome,
        "summary": event.summary,
    }


def citation_to_dict(citation: GuidelineCitation) -> dict[str, Any]:
    return {
        "source": citation.source.value,
        "title": citation.title,
        "snippet": citation.snippet,
    }


def decision_to_dict(decision: AgentDecision) -> dict[str, Any]:
    """Canonical flat serialization shared by the service, harness, and UI."""
    return {
        "post_id": decision.post_id,
        "label": decision.label.value,
        "confidence": decision.confidence,
        "explanation": decision.explanation,
        "guideline_citations": [citation_to_dict(c) for c in decision.guideline_citations],
        "trace": [trace_event_to_dict(e) for e in decision.trace],
        "retries_used": decision.retries_used,
    }
