"""Builds an AgentRuntime from a ServiceConfig.

With ``stubs: true`` every external endpoint is replaced by a
deterministic in-process double, so ingestion, evaluation, and the service
run with zero live dependencies.
"""

from __future__ import annotations

from pathlib import Path

from .agent import AgentConfig, AgentRuntime, HttpPlanner
from .config import ServiceConfig
from .core import Label, Tool
from .guidelines import GuidelineStore, HttpAnnotator
from .tools import HttpClassifier, HttpReasoner, HttpSlangDictionary, load_wordlist
from .vector_index import HttpEmbedder, VectorIndex


def agent_config_from(config: ServiceConfig) -> AgentConfig:
    return AgentConfig(
        enabled_tools=frozenset(Tool(t) for t in config.enabled_tools),
        planner_endpoint=config.planner_url,
        mode=config.mode,
    )


def build_runtime(config: ServiceConfig, require_indexes: bool = True) -> AgentRuntime:
    post_path = Path(config.post_index_path)
    guide_path = Path(config.guideline_index_path)
    if require_indexes:
        for path in (post_path, guide_path / "titles.index"):
            if not path.exists():
                raise FileNotFoundError(f"required index file missing: {path}")

    post_index = VectorIndex(path=post_path) if post_path.exists() else VectorIndex()
    guideline_store = (
        GuidelineStore.load(guide_path)
        if (guide_path / "titles.index").exists()
        else GuidelineStore()
    )
    wordlist = (
        load_wordlist(config.wordlist_path) if config.wordlist_path else {"the", "and", "a"}
    )

    if config.stubs:
        from .stubs import (
            HashingEmbedder,
            StubClassifier,
            StubDictionary,
            StubPlannerEndpoint,
            StubReasoner,
        )

        # stub truth: hash parity of the text; arbitrary but reproducible
        def truth(text: str) -> Label:
            return Label.HATE if sum(text.encode()) % 2 else Label.NOT_HATE

        return AgentRuntime(
            classifier=StubClassifier(truth, accuracy=0.9),
            embedder=HashingEmbedder(post_index.dimension),
            post_index=post_index,
            guideline_store=guideline_store,
            dictionary=StubDictionary(),
            reasoner=StubReasoner(truth, accuracy=0.95),
            planner=StubPlannerEndpoint(truth, accuracy=0.8),
            wordlist=wordlist,
        )

    return AgentRuntime(
        classifier=HttpClassifier(config.classifier_url) if config.classifier_url else None,
        embedder=HttpEmbedder(config.embedding_url, dimension=post_index.dimension)
        if config.embedding_url
        else None,
        post_index=post_index,
        guideline_store=guideline_store,
        dictionary=HttpSlangDictionary(config.dictionary_url) if config.dictionary_url else None,
        reasoner=HttpReasoner(config.reasoning_url) if config.reasoning_url else None,
        planner=HttpPlanner(config.planner_url) if config.planner_url else None,
        wordlist=wordlist,
    )


def build_annotator(config: ServiceConfig):
    if config.stubs or not config.reasoning_url:
        return _HeuristicAnnotator()
    return HttpAnnotator(config.reasoning_url)


class _HeuristicAnnotator:
    """Offline annotator: first heading or sentence as title, leading text
    as summary. Used in stub mode where no LLM endpoint exists."""

    def annotate_chunk(self, body: str) -> tuple[str, str]:
        lines = [l.strip() for l in body.splitlines() if l.strip()]
        title = lines[0].lstrip("# ").strip() if lines else "Untitled section"
        summary = " ".join(lines[1:3]) or title
        return title[:120], summary[:500]
