"""Agent orchestration: the planner loop, the deterministic fallback
pipeline, and the retry policy around structured-output validation.

The planner is an external LLM endpoint speaking a line-tagged action
format; tests script it with canned responses. The fallback pipeline runs
the tools in a fixed order so evaluations and ablations are reproducible
without any live planner.
"""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any

from .core import (
    MAX_RETRIES,
    AgentDecision,
    Label,
    Post,
    Tool,
    validate_decision,
)
from .errors import (
    DecisionValidationError,
    EndpointUnavailable,
    MalformedResponse,
    ModerationError,
    NoEvidence,
    PlannerUnavailable,
    RetriesExhausted,
    ToolBudgetExceeded,
)
from .tools import (
    ReasoningInput,
    TraceRecorder,
    extract_candidate_terms,
)

ALL_TOOLS = frozenset(Tool)

DEFAULT_SYSTEM_PROMPT = (
    "You are a content-moderation assistant. Decide whether the post is hate "
    "speech. You may call the listed tools to gather evidence, then finalize "
    "with a JSON object holding label, confidence, and explanation."
)


@dataclass(frozen=True)
class AgentConfig:
    enabled_tools: frozenset[Tool] = ALL_TOOLS
    max_retries: int = MAX_RETRIES
    planner_endpoint: str = ""
    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    max_tool_calls_per_run: int = 12
    mode: str = "planner"  # "planner" | "fallback"

    def without(self, tool: Tool) -> "AgentConfig":
        return replace(self, enabled_tools=frozenset(self.enabled_tools - {tool}))


@dataclass(frozen=True)
class PlannerAction:
    kind: str  # "call_tool" | "finalize"
    tool: Tool | None = None
    arguments: dict[str, Any] = field(default_factory=dict)
    final: dict[str, Any] | None = None


def parse_planner_response(text: str) -> PlannerAction:
    """Parse the line-tagged planner format.

    ACTION: call_tool | finalize
    TOOL: <tool name>          (call_tool only)
    ARGS: <json object>        (call_tool only, optional)
    FINAL: <json object>       (finalize only)
    """
    fields: dict[str, str] = {}
    for line in text.splitlines():
        if ":" in line:
            key, _, value = line.partition(":")
            key = key.strip().upper()
            if key in ("ACTION", "TOOL", "ARGS", "FINAL") and key not in fields:
                fields[key] = value.strip()
    action = fields.get("ACTION")
    if action == "call_tool":
        if "TOOL" not in fields:
            raise MalformedResponse("call_tool action without TOOL line")
        try:
            tool = Tool(fields["TOOL"])
        except ValueError as exc:
            raise MalformedResponse(f"unknown tool {fields['TOOL']!r}") from exc
        arguments = {}
        if fields.get("ARGS"):
            try:
                arguments = json.loads(fields["ARGS"])
            except json.JSONDecodeError as exc:
                raise MalformedResponse(f"bad ARGS json: {exc}") from exc
        return PlannerAction(kind="call_tool", tool=tool, arguments=arguments)
    if action == "finalize":
        if "FINAL" not in fields:
            raise MalformedResponse("finalize action without FINAL line")
        try:
            final = json.loads(fields["FINAL"])
        except json.JSONDecodeError as exc:
            raise MalformedResponse(f"bad FINAL json: {exc}") from exc
        return PlannerAction(kind="finalize", final=final)
    raise MalformedResponse(f"unknown or missing ACTION in planner response: {action!r}")


class HttpPlanner:
    """POST {base_url}/agent {"prompt": ...} -> {"text": ...}."""

    def __init__(self, base_url: str, timeout: float = 120.0, transport=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, prompt: str) -> str:
        import httpx

        url = f"{self.base_url}/agent"
        try:
            response = self._client.post(url, json={"prompt": prompt})
        except httpx.HTTPError as exc:
            raise PlannerUnavailable(f"{url}: {exc}") from exc
        if response.status_code != 200:
            raise PlannerUnavailable(f"{url}: status {response.status_code}")
        try:
            return response.json()["text"]
        except (KeyError, ValueError) as exc:
            raise PlannerUnavailable(f"{url}: malformed response") from exc


class ScriptedPlanner:
    """Canned planner responses consumed in order; the test harness planner."""

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self._cursor = 0

    @classmethod
    def from_file(cls, path) -> "ScriptedPlanner":
        """Responses separated by lines containing only '---'."""
        text = open(path, encoding="utf-8").read()
        return cls([part.strip() for part in text.split("\n---\n") if part.strip()])

    def complete(self, prompt: str) -> str:
        if self._cursor >= len(self._responses):
            raise PlannerUnavailable("scripted planner ran out of responses")
        response = self._responses[self._cursor]
        self._cursor += 1
        return response


@dataclass
class AgentRuntime:
    """Bundles the tool clients an agent run needs.

    Every field is duck-typed: HTTP clients in production, in-process stubs
    in tests. ``clock`` feeds trace timestamps; inject a counter for
    byte-identical runs.
    """

    classifier: Any = None  # .classify(text) -> ClassifierVerdict
    embedder: Any = None  # .embed(text) -> vector
    post_index: Any = None  # VectorIndex
    guideline_store: Any = None  # GuidelineStore
    dictionary: Any = None  # .lookup_slang(term) -> [SlangDefinition]
    reasoner: Any = None  # .reason(ReasoningInput) -> ReasoningOutput
    planner: Any = None  # .complete(prompt) -> str
    wordlist: set[str] | None = None
    clock: Any = time.monotonic

    def similar_posts(self, text: str, k: int = 5):
        return self.post_index.top_k(self.embedder.embed(text), k=k)


def render_planner_prompt(post: Post, evidence: list[str], config: AgentConfig) -> str:
    """Deterministic planner prompt: system prompt, roster of enabled tools,
    the post, then evidence blocks in invocation order."""
    roster = sorted(t.value for t in config.enabled_tools)
    lines = [config.system_prompt, "", "TOOLS: " + (", ".join(roster) if roster else "(none)")]
    lines.append(f"POST [{post.id}]: {post.text}")
    for block in evidence:
        lines.append("")
        lines.append(block)
    return "\n".join(lines)


def _execute_tool(
    post: Post, action: PlannerAction, runtime: AgentRuntime, recorder: TraceRecorder,
    cache: dict,
) -> str:
    """Run one planner-requested tool and return an evidence block."""
    tool = action.tool
    key = (tool, json.dumps(action.arguments, sort_keys=True))
    if key in cache:
        return cache[key]
    if tool is Tool.CLASSIFIER:
        verdict = recorder.record(
            tool,
            lambda: runtime.classifier.classify(action.arguments.get("text", post.text)),
            lambda v: f"label={v.label.value} p={v.probability:.4f}",
        )
        block = f"EVIDENCE classifier: label={verdict.label.value} probability={verdict.probability:.4f}"
    elif tool is Tool.SIMILAR_POSTS:
        k = int(action.arguments.get("k", 5))
        hits = recorder.record(
            tool,
            lambda: runtime.similar_posts(action.arguments.get("text", post.text), k=k),
            lambda hs: f"{len(hs)} hits (raw cosine)",
        )
        body = "\n".join(
            f'- ("{h.text}", {h.score:.4f}, {h.label.value})' for h in hits
        )
        block = "EVIDENCE similar_posts:\n" + (body or "- (no indexed posts)")
    elif tool is Tool.SLANG_DICTIONARY:
        term = action.arguments.get("term")
        if term:
            terms = [term]
        else:
            terms = extract_candidate_terms(post.text, runtime.wordlist or {"the"})
        definitions = []
        for t in terms:
            try:
                definitions.extend(
                    recorder.record(
                        tool,
                        lambda t=t: runtime.dictionary.lookup_slang(t),
                        lambda ds: f"{len(ds)} definitions for {t!r}",
                    )
                )
            except (EndpointUnavailable, MalformedResponse):
                pass  # auxiliary evidence; the agent proceeds without it
        body = "\n".join(f"- {d.term}: {d.definition}" for d in definitions)
        block = "EVIDENCE slang_dictionary:\n" + (body or "- (no definitions found)")
    elif tool is Tool.REASONING:
        inp = ReasoningInput(post_text=post.text)
        output = recorder.record(
            tool,
            lambda: runtime.reasoner.reason(inp),
            lambda o: f"label={o.suggested_label.value} conf={o.suggested_confidence:.4f}",
        )
        block = (
            f"EVIDENCE reasoning: label={output.suggested_label.value} "
            f"confidence={output.suggested_confidence:.4f} rationale={output.rationale}"
        )
    elif tool is Tool.GUIDELINES:
        citations = recorder.record(
            tool,
            lambda: runtime.guideline_store.retrieve(
                action.arguments.get("text", post.text), runtime.embedder
            ),
            lambda cs: f"{len(cs)} citations",
        )
        body = "\n".join(f"- [{c.source.value}] {c.title}" for c in citations)
        block = "EVIDENCE guidelines:\n" + (body or "- (none)")
    else:  # pragma: no cover - closed enum
        raise MalformedResponse(f"unhandled tool {tool}")
    cache[key] = block
    return block


def _attach_citations(decision: AgentDecision, runtime, recorder, config) -> AgentDecision:
    """Retrieve policy citations grounding the explanation, when enabled.

    Guidelines never change the label; they contextualise it after the fact.
    """
    if Tool.GUIDELINES not in config.enabled_tools or runtime.guideline_store is None:
        return decision
    try:
        citations = recorder.record(
            Tool.GUIDELINES,
            lambda: runtime.guideline_store.retrieve(decision.explanation, runtime.embedder),
            lambda cs: f"{len(cs)} citations for explanation",
        )
    except ModerationError:
        return decision
    return replace(decision, guideline_citations=tuple(citations))


def decide(post: Post, config: AgentConfig, runtime: AgentRuntime) -> AgentDecision:
    """Run the planner loop until a valid decision or a hard failure.

    A "retry" re-asks the planner after its finalize output fails
    validation; tool results are cached within the run, so retries never
    re-run tools. An action naming a disabled tool is rejected and the
    rejection is fed back as an observation.
    """
    if runtime.planner is None:
        raise PlannerUnavailable("no planner configured")
    recorder = TraceRecorder(clock=runtime.clock)
    evidence: list[str] = []
    cache: dict = {}
    invalid_finalizes = 0
    tool_calls = 0
    while True:
        prompt = render_planner_prompt(post, evidence, config)
        response = runtime.planner.complete(prompt)
        try:
            action = parse_planner_response(response)
        except MalformedResponse as exc:
            invalid_finalizes += 1
            if invalid_finalizes > MAX_RETRIES:
                raise RetriesExhausted(
                    f"planner produced unusable output {invalid_finalizes} times"
                ) from exc
            evidence.append(f"OBSERVATION: your last response was invalid ({exc})")
            continue
        if action.kind == "call_tool":
            tool_calls += 1
            if tool_calls > config.max_tool_calls_per_run:
                raise ToolBudgetExceeded(
                    f"more than {config.max_tool_calls_per_run} tool calls in one run"
                )
            if action.tool not in config.enabled_tools:
                evidence.append(
                    f"OBSERVATION: tool {action.tool.value!r} is not available in this configuration"
                )
                continue
            try:
                evidence.append(_execute_tool(post, action, runtime, recorder, cache))
            except ModerationError as exc:
                evidence.append(
                    f"OBSERVATION: tool {action.tool.value!r} failed ({type(exc).__name__})"
                )
            continue
        # finalize
        try:
            decision = validate_decision(
                action.final,
                post_id=post.id,
                trace=tuple(recorder.events),
                retries_used=invalid_finalizes,
            )
        except DecisionValidationError as exc:
            invalid_finalizes += 1
            if invalid_finalizes > MAX_RETRIES:
                raise RetriesExhausted(
                    f"planner failed validation {invalid_finalizes} times: {exc.problems}"
                ) from exc
            evidence.append(
                "OBSERVATION: your decision was rejected (" + ", ".join(exc.problems) + ")"
            )
            continue
        decision = _attach_citations(decision, runtime, recorder, config)
        return replace(decision, trace=tuple(recorder.events))


def run_fallback(post: Post, config: AgentConfig, runtime: AgentRuntime) -> AgentDecision:
    """Deterministic fixed-order pipeline for tests and ablations.

    Order: classifier, similar posts, slang lookup, reasoning, finalize.
    Label priority: reasoning > classifier > majority of top-5 similar
    posts (ties break to not_hate). With every tool disabled the bare post
    is routed to the planner endpoint for a direct judgement.
    """
    enabled = config.enabled_tools
    recorder = TraceRecorder(clock=runtime.clock)
    evidence_bits: list[str] = []

    verdict = None
    if Tool.CLASSIFIER in enabled and runtime.classifier is not None:
        verdict = recorder.record(
            Tool.CLASSIFIER,
            lambda: runtime.classifier.classify(post.text),
            lambda v: f"label={v.label.value} p={v.probability:.4f}",
        )
        evidence_bits.append(
            f"classifier said {verdict.label.value} (p={verdict.probability:.2f})"
        )

    hits = []
    if Tool.SIMILAR_POSTS in enabled and runtime.post_index is not None:
        hits = recorder.record(
            Tool.SIMILAR_POSTS,
            lambda: runtime.similar_posts(post.text, k=5),
            lambda hs: f"{len(hs)} hits (raw cosine)",
        )
        if hits:
            flags = Counter(h.label for h in hits)
            evidence_bits.append(
                f"top-{len(hits)} similar posts: {flags[Label.HATE]} hate / "
                f"{flags[Label.NOT_HATE]} not_hate"
            )

    definitions = []
    if Tool.SLANG_DICTIONARY in enabled and runtime.dictionary is not None:
        for term in extract_candidate_terms(post.text, runtime.wordlist or {"the"}):
            try:
                definitions.extend(
                    recorder.record(
                        Tool.SLANG_DICTIONARY,
                        lambda term=term: runtime.dictionary.lookup_slang(term),
                        lambda ds, term=term: f"{len(ds)} definitions for {term!r}",
                    )
                )
            except (EndpointUnavailable, MalformedResponse):
                pass  # non-fatal: proceed without definitions
        if definitions:
            evidence_bits.append(f"slang definitions for {len(definitions)} sense(s)")

    reasoning = None
    if Tool.REASONING in enabled and runtime.reasoner is not None:
        inp = ReasoningInput(
            post_text=post.text,
            similar_posts=tuple(hits[:5]),
            classifier=verdict,
            definitions=tuple(definitions[:3]),
        )
        reasoning = recorder.record(
            Tool.REASONING,
            lambda: runtime.reasoner.reason(inp),
            lambda o: f"label={o.suggested_label.value} conf={o.suggested_confidence:.4f}",
        )
        evidence_bits.append(f"reasoner: {reasoning.rationale}")

    if reasoning is not None:
        label, confidence = reasoning.suggested_label, reasoning.suggested_confidence
    elif verdict is not None:
        label = verdict.label
        confidence = verdict.probability if verdict.label is Label.HATE else 1.0 - verdict.probability
    elif hits:
        flags = Counter(h.label for h in hits)
        if flags[Label.HATE] > flags[Label.NOT_HATE]:
            label = Label.HATE
        else:
            label = Label.NOT_HATE  # ties break to not_hate
        majority = [h for h in hits if h.label is label]
        confidence = max(0.0, min(1.0, sum(h.score for h in majority) / len(majority)))
    else:
        return _fallback_via_planner(post, config, runtime, recorder)

    explanation = (
        f"Labelled {label.value} from fixed-pipeline evidence: "
        + "; ".join(evidence_bits)
    )
    decision = AgentDecision(
        post_id=post.id,
        label=label,
        confidence=confidence,
        explanation=explanation,
        trace=tuple(recorder.events),
        retries_used=0,
    )
    decision = _attach_citations(decision, runtime, recorder, config)
    return replace(decision, trace=tuple(recorder.events))


def _fallback_via_planner(post, config, runtime, recorder) -> AgentDecision:
    # no-tools ablation: the bare post goes to the planner for a direct call
    if runtime.planner is None:
        raise NoEvidence("all tools disabled and no planner endpoint configured")
    prompt = render_planner_prompt(post, [], replace(config, enabled_tools=frozenset()))
    response = runtime.planner.complete(prompt)
    action = parse_planner_response(response)
    if action.kind != "finalize":
        raise MalformedResponse("direct judgement must be a finalize action")
    decision = validate_decision(
        action.final, post_id=post.id, trace=tuple(recorder.events), retries_used=0
    )
    return decision


def run(post: Post, config: AgentConfig, runtime: AgentRuntime) -> AgentDecision:
    """Dispatch on the configured mode."""
    if config.mode == "fallback":
        return run_fallback(post, config, runtime)
    return decide(post, config, runtime)
