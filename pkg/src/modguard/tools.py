"""The five evidence tools exposed to the agent.

Each tool is a stateless client (or a thin delegate onto the vector index)
with a uniform invocation contract: the orchestrator wraps every call in a
:class:`TraceRecorder` so that success or failure always appends exactly one
trace event.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from urllib.parse import quote

from .core import Label, Tool, ToolTraceEvent
from .errors import (
    EmptyTerm,
    EmptyText,
    EndpointUnavailable,
    MalformedResponse,
    UnparseableRationale,
)
from .vector_index import SimilarPost, VectorIndex


@dataclass(frozen=True)
class ClassifierVerdict:
    label: Label
    probability: float  # probability of hate

    def __post_init__(self):
        if not (0.0 <= self.probability <= 1.0):
            raise ValueError("probability out of [0, 1]")


@dataclass(frozen=True)
class SlangDefinition:
    term: str
    definition: str
    example: str | None = None
    approval_score: int = 0


@dataclass(frozen=True)
class ReasoningInput:
    post_text: str
    similar_posts: tuple[SimilarPost, ...] = ()
    classifier: ClassifierVerdict | None = None
    definitions: tuple[SlangDefinition, ...] = ()

    def __post_init__(self):
        if len(self.similar_posts) > 5:
            raise ValueError("at most 5 similar posts feed the reasoner")


@dataclass(frozen=True)
class ReasoningOutput:
    rationale: str
    suggested_label: Label
    suggested_confidence: float

    def __post_init__(self):
        if not (0.0 <= self.suggested_confidence <= 1.0):
            raise ValueError("confidence out of [0, 1]")
        if not self.rationale:
            raise ValueError("rationale must be non-empty")


class TraceRecorder:
    """Collects one ToolTraceEvent per tool invocation within a run."""

    def __init__(self, clock=time.monotonic):
        self._clock = clock
        self.events: list[ToolTraceEvent] = []

    def record(self, tool: Tool, fn, summary_fn=None):
        """Invoke ``fn`` and append exactly one event, ok or error."""
        started = self._clock()
        try:
            result = fn()
        except Exception as exc:
            self.events.append(
                ToolTraceEvent(
                    tool=tool,
                    started_at=started,
                    duration=max(0.0, self._clock() - started),
                    outcome="error",
                    summary=f"{type(exc).__name__}: {exc}",
                )
            )
            raise
        summary = summary_fn(result) if summary_fn else repr(result)
        self.events.append(
            ToolTraceEvent(
                tool=tool,
                started_at=started,
                duration=max(0.0, self._clock() - started),
                outcome="ok",
                summary=summary,
            )
        )
        return result


class HttpClassifier:
    """Client for the hate-speech classifier inference endpoint.

    POST {base_url}/classify {"text": ...} -> {"label": ..., "probability": p}.
    The verdict label is derived from the probability with a 0.5 threshold,
    which is the endpoint contract.
    """

    def __init__(self, base_url: str, timeout: float = 10.0, transport=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def classify(self, text: str) -> ClassifierVerdict:
        import httpx

        if not text.strip():
            raise EmptyText("cannot classify empty text")
        url = f"{self.base_url}/classify"
        try:
            response = self._client.post(url, json={"text": text})
        except httpx.TimeoutException as exc:
            raise EndpointUnavailable(url, detail=f"timeout: {exc}") from exc
        except httpx.HTTPError as exc:
            raise EndpointUnavailable(url, detail=str(exc)) from exc
        if response.status_code != 200:
            raise EndpointUnavailable(url, status=response.status_code)
        try:
            probability = float(response.json()["probability"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponse(f"classifier response missing probability: {exc}") from exc
        if not (0.0 <= probability <= 1.0):
            raise MalformedResponse(f"classifier probability {probability} out of [0, 1]")
        label = Label.HATE if probability >= 0.5 else Label.NOT_HATE
        return ClassifierVerdict(label=label, probability=probability)


class SimilarPostsTool:
    """Delegates embed + top_k onto the post index; k defaults to 5."""

    def __init__(self, index: VectorIndex, embedder):
        self.index = index
        self.embedder = embedder

    def similar_posts(self, text: str, k: int = 5) -> list[SimilarPost]:
        if not text.strip():
            raise EmptyText("cannot search with empty text")
        return self.index.top_k(self.embedder.embed(text), k=k)


class HttpSlangDictionary:
    """Client for the crowd-sourced slang dictionary endpoint.

    GET {base_url}/define?term=... -> {"list": [{definition, example,
    thumbs_up, thumbs_down}, ...]}. Returns at most 3 definitions ranked by
    net votes (response order breaks ties). Unknown terms yield [].
    """

    MAX_DEFINITIONS = 3

    def __init__(self, base_url: str, timeout: float = 5.0, transport=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def lookup_slang(self, term: str) -> list[SlangDefinition]:
        import httpx

        term = term.strip()
        if not term:
            raise EmptyTerm("slang term is empty")
        url = f"{self.base_url}/define?term={quote(term)}"
        try:
            response = self._client.get(url)
        except httpx.HTTPError as exc:
            raise EndpointUnavailable(url, detail=str(exc)) from exc
        if response.status_code != 200:
            raise EndpointUnavailable(url, status=response.status_code)
        try:
            entries = response.json()["list"]
        except (KeyError, ValueError) as exc:
            raise MalformedResponse("dictionary response has no 'list' field") from exc
        definitions = []
        for entry in entries:
            if "definition" not in entry or not entry["definition"]:
                raise MalformedResponse("dictionary entry lacks a definition")
            definitions.append(
                SlangDefinition(
                    term=term,
                    definition=entry["definition"],
                    example=entry.get("example") or None,
                    approval_score=int(entry.get("thumbs_up", 0))
                    - int(entry.get("thumbs_down", 0)),
                )
            )
        definitions.sort(key=lambda d: -d.approval_score)  # stable: ties keep order
        return definitions[: self.MAX_DEFINITIONS]


_TOKEN_RE = re.compile(r"[a-z]+")


def extract_candidate_terms(text: str, wordlist: set[str], limit: int = 3) -> list[str]:
    """Pick up to ``limit`` lowercase alphabetic tokens (len >= 3) absent
    from the wordlist, in first-occurrence order. Deterministic fallback for
    choosing dictionary lookups when no planner is steering."""
    if not wordlist:
        raise ValueError("wordlist must be non-empty")
    seen: list[str] = []
    for token in _TOKEN_RE.findall(text.lower()):
        if len(token) >= 3 and token not in wordlist and token not in seen:
            seen.append(token)
            if len(seen) == limit:
                break
    return seen


def load_wordlist(path) -> set[str]:
    with open(path, encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip()}


def render_reasoning_prompt(inp: ReasoningInput) -> str:
    """Deterministic prompt for the reasoning endpoint: the post, one
    evidence line per similar post as a (text, score, flag) triple, and
    optional classifier/definition blocks."""
    lines = [
        "Judge whether the post below is hate speech.",
        "Reply with three tagged lines: LABEL: hate|not_hate, CONF: <0..1>, RATIONALE: <why>.",
        "",
        f"POST: {inp.post_text}",
    ]
    if inp.similar_posts:
        lines.append("SIMILAR POSTS:")
        for sp in inp.similar_posts:
            lines.append(f'- ("{sp.text}", {sp.score:.4f}, {sp.label.value})')
    if inp.classifier is not None:
        lines.append(
            f"CLASSIFIER: {inp.classifier.label.value} (p={inp.classifier.probability:.4f})"
        )
    if inp.definitions:
        lines.append("DEFINITIONS:")
        for d in inp.definitions:
            lines.append(f"- {d.term}: {d.definition}")
    return "\n".join(lines)


def parse_reasoning_response(text: str) -> ReasoningOutput:
    label_match = re.search(r"^LABEL:\s*(\S+)", text, re.MULTILINE)
    if not label_match:
        raise UnparseableRationale("response lacks a LABEL marker")
    try:
        label = Label(label_match.group(1).strip())
    except ValueError as exc:
        raise UnparseableRationale(f"unknown label {label_match.group(1)!r}") from exc
    conf_match = re.search(r"^CONF:\s*([0-9.]+)", text, re.MULTILINE)
    confidence = float(conf_match.group(1)) if conf_match else 0.5
    rationale_match = re.search(r"^RATIONALE:\s*(.+)", text, re.MULTILINE | re.DOTALL)
    rationale = rationale_match.group(1).strip() if rationale_match else text.strip()
    return ReasoningOutput(
        rationale=rationale, suggested_label=label, suggested_confidence=confidence
    )


class HttpReasoner:
    """Client for the reasoning-model endpoint.

    POST {base_url}/generate {"prompt": ...} -> {"text": ...}, parsed from
    the LABEL/CONF/RATIONALE line-tagged format. The default timeout is far
    above the other tools because reasoning dominates latency.
    """

    def __init__(self, base_url: str, timeout: float = 120.0, transport=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def reason(self, inp: ReasoningInput) -> ReasoningOutput:
        import httpx

        if not inp.post_text.strip():
            raise EmptyText("cannot reason over empty text")
        url = f"{self.base_url}/generate"
        prompt = render_reasoning_prompt(inp)
        try:
            response = self._client.post(url, json={"prompt": prompt})
        except httpx.HTTPError as exc:
            raise EndpointUnavailable(url, detail=str(exc)) from exc
        if response.status_code != 200:
            raise EndpointUnavailable(url, status=response.status_code)
        try:
            text = response.json()["text"]
        except (KeyError, ValueError) as exc:
            raise MalformedResponse("reasoning response has no 'text' field") from exc
        return parse_reasoning_response(text)
