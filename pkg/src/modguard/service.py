"""HTTP surface: classify, feedback, guideline search, and health.

All routes speak JSON; errors use {"error": code, "detail": string}.
Decisions are kept in a bounded in-memory ring keyed by decision_id so
feedback can reference them later.
"""

from __future__ import annotations

import threading
import uuid
from collections import OrderedDict

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .agent import AgentConfig, AgentRuntime, run
from .core import Platform, Post, Tool, decision_to_dict, citation_to_dict
from .errors import (
    DuplicateFeedback,
    EmptyIndex,
    EmptyText,
    EndpointUnavailable,
    ModerationError,
)
from .feedback import FeedbackStore, VERDICTS

RING_CAPACITY = 10_000


class DecisionRing:
    """Last-N decisions, lock-protected, keyed by decision_id."""

    def __init__(self, capacity: int = RING_CAPACITY):
        self._lock = threading.Lock()
        self._items: OrderedDict[str, tuple] = OrderedDict()
        self.capacity = capacity

    def put(self, decision, post_text: str) -> str:
        decision_id = uuid.uuid4().hex
        with self._lock:
            self._items[decision_id] = (decision, post_text)
            while len(self._items) > self.capacity:
                self._items.popitem(last=False)
        return decision_id

    def get(self, decision_id: str):
        with self._lock:
            return self._items.get(decision_id)


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def build_app(
    agent_config: AgentConfig,
    runtime: AgentRuntime,
    feedback_store: FeedbackStore | None = None,
    cors_origin: str = "*",
) -> FastAPI:
    app = FastAPI(title="moderation agent")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    ring = DecisionRing()
    app.state.ring = ring
    app.state.runtime = runtime

    @app.post("/api/classify")
    async def classify(request: Request):
        body = await request.json()
        text = (body.get("text") or "").strip()
        if not text:
            return _error(400, "empty_text", "text must be non-empty")
        platform = body.get("platform")
        try:
            post = Post(
                id=uuid.uuid4().hex,
                text=text,
                platform=Platform(platform) if platform else None,
            )
        except ValueError:
            return _error(400, "bad_platform", f"unknown platform {platform!r}")
        try:
            decision = run(post, agent_config, runtime)
        except EndpointUnavailable as exc:
            tool = _failing_tool(exc, runtime)
            if "timeout" in (exc.detail or "").lower():
                return _error(504, "timeout", f"{tool}: {exc}")
            return _error(502, "upstream_failure", f"{tool}: {exc}")
        except ModerationError as exc:
            return _error(502, "upstream_failure", str(exc))
        decision_id = ring.put(decision, text)
        payload = decision_to_dict(decision)
        payload["decision_id"] = decision_id
        return payload

    @app.post("/api/feedback")
    async def feedback(request: Request):
        if feedback_store is None:
            return _error(503, "feedback_disabled", "no feedback store configured")
        body = await request.json()
        verdict = body.get("verdict")
        if verdict not in VERDICTS:
            return _error(400, "bad_verdict", f"verdict must be one of {VERDICTS}")
        entry = ring.get(body.get("decision_id", ""))
        if entry is None:
            return _error(404, "unknown_decision", "decision_id not found on this instance")
        decision, _decision_text = entry
        post_text = (body.get("post_text") or "").strip()
        if not post_text:
            return _error(400, "empty_text", "post_text must be non-empty")
        try:
            record = feedback_store.apply_feedback(decision, post_text, verdict)
        except DuplicateFeedback as exc:
            return _error(409, "duplicate_feedback", str(exc))
        except ModerationError as exc:
            return _error(502, "feedback_failed", str(exc))
        return {
            "feedback_id": record.feedback_id,
            "post_text": record.post_text,
            "predicted_label": record.predicted_label.value,
            "verdict": record.verdict,
            "stored_label": record.stored_label.value,
            "created_at": record.created_at,
        }

    @app.get("/api/guidelines/search")
    async def guidelines_search(q: str = "", k: int = 3):
        if not q.strip():
            return _error(400, "empty_query", "q must be non-empty")
        store = runtime.guideline_store
        try:
            citations = store.retrieve(q, runtime.embedder, k=k)
        except EmptyIndex:
            return []
        except ModerationError as exc:
            return _error(502, "guideline_search_failed", str(exc))
        return [citation_to_dict(c) for c in citations]

    @app.get("/api/health")
    async def health():
        deps = {}
        for name, client in (
            ("classifier", runtime.classifier),
            ("embedder", runtime.embedder),
            ("dictionary", runtime.dictionary),
            ("reasoner", runtime.reasoner),
            ("planner", runtime.planner),
        ):
            if client is None:
                deps[name] = "unconfigured"
            else:
                deps[name] = _probe(client)
        return {
            "status": "ok",
            "post_index_count": runtime.post_index.count() if runtime.post_index else 0,
            "guideline_chunks": runtime.guideline_store.count()
            if runtime.guideline_store
            else 0,
            "dependencies": deps,
        }

    return app


def _probe(client) -> str:
    """Best-effort reachability check; never fails the health request."""
    base_url = getattr(client, "base_url", None)
    if base_url is None:
        return "ok"  # in-process stub
    try:
        import httpx

        httpx.get(base_url, timeout=2.0)
        return "ok"
    except Exception:
        return "unreachable"


def _failing_tool(exc: EndpointUnavailable, runtime: AgentRuntime) -> str:
    url = exc.url or ""
    for name, client in (
        ("classifier", runtime.classifier),
        ("similar_posts", runtime.embedder),
        ("slang_dictionary", runtime.dictionary),
        ("reasoning", runtime.reasoner),
    ):
        base = getattr(client, "base_url", None)
        if base and url.startswith(base):
            return name
    return "unknown"
