"""Platform policy ingestion and retrieval.

Documents arrive as pre-fetched markdown (one file per source). They are
chunked at heading boundaries, each chunk gets an LLM-generated title and
summary, and the titles are embedded into a dedicated index (separate from
the post index). Retrieval returns citations whose snippet is the bounded
summary; the raw body stays stored for audit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import GuidelineCitation, GuidelineSource
from .errors import (
    EmptyDocument,
    EmptyIndex,
    EmptyText,
    EndpointUnavailable,
    MalformedResponse,
    ModerationError,
)
from .vector_index import IndexedExample, Label, VectorIndex

MAX_TITLE_CHARS = 120
MAX_SUMMARY_CHARS = 500
DEFAULT_CHUNK_CHARS = 1500

ANNOTATION_PROMPT = (
    "Read the policy excerpt below and reply with exactly two tagged lines:\n"
    "TITLE: <short title>\n"
    "SUMMARY: <one-paragraph summary>\n"
    "\n"
    "EXCERPT:\n"
)


@dataclass(frozen=True)
class GuidelineDocument:
    source: GuidelineSource
    url: str
    markdown: str
    fetched_at: str = ""  # RFC 3339 when known

    def __post_init__(self):
        if not self.markdown.strip():
            raise EmptyDocument(f"guideline document for {self.source.value} is empty")


@dataclass(frozen=True)
class GuidelineChunk:
    chunk_id: str
    source: GuidelineSource
    title: str
    summary: str
    body: str
    title_vector: np.ndarray


@dataclass
class GuidelineIngestReport:
    indexed: int = 0
    failures: list[tuple[str, str]] = None  # (chunk id, reason)

    def __post_init__(self):
        if self.failures is None:
            self.failures = []


def chunk_markdown(
    doc: GuidelineDocument, max_chunk_chars: int = DEFAULT_CHUNK_CHARS
) -> list[tuple[GuidelineSource, str]]:
    """Split a document into chunks no longer than ``max_chunk_chars``.

    Splits at markdown headings first; sections still over the cap are split
    again at paragraph boundaries (greedy packing), and a single oversize
    paragraph is hard-split. Concatenating the bodies in order reproduces
    the document text modulo boundary whitespace.
    """
    if max_chunk_chars < 200:
        raise ValueError("max_chunk_chars must be >= 200")
    text = doc.markdown
    sections: list[str] = []
    current: list[str] = []
    for line in text.splitlines(keepends=True):
        if line.lstrip().startswith("#") and current:
            sections.append("".join(current))
            current = [line]
        else:
            current.append(line)
    if current:
        sections.append("".join(current))

    bodies: list[str] = []
    for section in sections:
        if len(section) <= max_chunk_chars:
            bodies.append(section)
            continue
        paragraphs = re.split(r"(\n\s*\n)", section)  # keep separators
        buffer = ""
        for piece in paragraphs:
            if buffer and len(buffer) + len(piece) > max_chunk_chars:
                bodies.append(buffer)
                buffer = piece
            else:
                buffer += piece
            while len(buffer) > max_chunk_chars:  # single oversize paragraph
                cut = buffer.rfind(" ", 1, max_chunk_chars + 1)
                if cut <= 0:
                    cut = max_chunk_chars
                bodies.append(buffer[:cut])
                buffer = buffer[cut:]
        if buffer:
            bodies.append(buffer)

    out = []
    for body in bodies:
        stripped = body.strip()
        if stripped:
            out.append((doc.source, stripped))
    if not out:
        raise EmptyDocument("chunking produced no non-empty chunks")
    return out


def parse_annotation_response(text: str) -> tuple[str, str]:
    title_match = re.search(r"^TITLE:\s*(.+)$", text, re.MULTILINE)
    summary_match = re.search(r"^SUMMARY:\s*(.+)$", text, re.MULTILINE)
    if not title_match or not summary_match:
        raise MalformedResponse("annotation response lacks TITLE/SUMMARY markers")
    title = title_match.group(1).strip()[:MAX_TITLE_CHARS]
    summary = summary_match.group(1).strip()[:MAX_SUMMARY_CHARS]
    if not title:
        raise MalformedResponse("annotation returned an empty title")
    return title, summary


class HttpAnnotator:
    """Generates a (title, summary) pair per chunk via the LLM endpoint."""

    def __init__(self, base_url: str, timeout: float = 120.0, transport=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def annotate_chunk(self, body: str) -> tuple[str, str]:
        import httpx

        if not body.strip():
            raise EmptyText("cannot annotate an empty chunk")
        url = f"{self.base_url}/generate"
        try:
            response = self._client.post(url, json={"prompt": ANNOTATION_PROMPT + body})
        except httpx.HTTPError as exc:
            raise EndpointUnavailable(url, detail=str(exc)) from exc
        if response.status_code != 200:
            raise EndpointUnavailable(url, status=response.status_code)
        try:
            text = response.json()["text"]
        except (KeyError, ValueError) as exc:
            raise MalformedResponse("annotation response has no 'text' field") from exc
        return parse_annotation_response(text)


class GuidelineStore:
    """Chunk metadata plus a title-vector index, disjoint from the post index."""

    def __init__(self, dimension: int = 1024):
        self.index = VectorIndex(dimension=dimension)
        self.chunks: dict[str, GuidelineChunk] = {}

    def count(self) -> int:
        return len(self.chunks)

    def ingest(
        self, docs: list[GuidelineDocument], annotator, embedder,
        max_chunk_chars: int = DEFAULT_CHUNK_CHARS,
    ) -> GuidelineIngestReport:
        """Chunk, annotate, embed titles, and index every document.

        Per-chunk failures are reported and the pipeline continues.
        """
        report = GuidelineIngestReport()
        for doc in docs:
            for i, (source, body) in enumerate(chunk_markdown(doc, max_chunk_chars)):
                chunk_id = f"{source.value}-{i:04d}-{len(self.chunks):04d}"
                try:
                    title, summary = annotator.annotate_chunk(body)
                    vector = embedder.embed(title)
                    chunk = GuidelineChunk(
                        chunk_id=chunk_id,
                        source=source,
                        title=title,
                        summary=summary,
                        body=body,
                        title_vector=vector,
                    )
                    self.index.upsert(
                        IndexedExample(
                            record_id=chunk_id,
                            text=title,
                            label=Label.NOT_HATE,  # labels are meaningless here
                            vector=vector,
                        )
                    )
                    self.chunks[chunk_id] = chunk
                    report.indexed += 1
                except ModerationError as exc:
                    report.failures.append((chunk_id, str(exc)))
        return report

    def retrieve(self, decision_text: str, embedder, k: int = 3) -> list[GuidelineCitation]:
        """Embed the decision text and return the k best-matching citations."""
        if not decision_text.strip():
            raise EmptyText("cannot retrieve guidelines for empty text")
        if not self.chunks:
            raise EmptyIndex("guideline index is empty")
        query = embedder.embed(decision_text)
        citations = []
        for record, _score in self.index.top_k_records(query, k=k):
            chunk = self.chunks[record.record_id]
            citations.append(
                GuidelineCitation(source=chunk.source, title=chunk.title, snippet=chunk.summary)
            )
        return citations


    def save(self, directory: str | Path) -> None:
        """Persist as a directory: the title index plus a chunk JSONL."""
        import json

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.index.save(directory / "titles.index")
        with open(directory / "chunks.jsonl", "w", encoding="utf-8") as fh:
            for chunk in self.chunks.values():
                fh.write(
                    json.dumps(
                        {
                            "chunk_id": chunk.chunk_id,
                            "source": chunk.source.value,
                            "title": chunk.title,
                            "summary": chunk.summary,
                            "body": chunk.body,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, directory: str | Path) -> "GuidelineStore":
        import json

        directory = Path(directory)
        store = cls.__new__(cls)
        store.index = VectorIndex.load(directory / "titles.index")
        store.chunks = {}
        for line in (directory / "chunks.jsonl").read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            record = store.index.get(d["chunk_id"])
            store.chunks[d["chunk_id"]] = GuidelineChunk(
                chunk_id=d["chunk_id"],
                source=GuidelineSource(d["source"]),
                title=d["title"],
                summary=d["summary"],
                body=d["body"],
                title_vector=record.vector if record is not None else None,
            )
        return store


def load_guideline_documents(directory: str | Path) -> list[GuidelineDocument]:
    """Read fixture documents: one ``<source>.md`` per source with a sidecar
    ``<source>.meta`` containing ``url=<original url>``."""
    directory = Path(directory)
    docs = []
    for source in GuidelineSource:
        md_path = directory / f"{source.value}.md"
        if not md_path.exists():
            continue
        url = ""
        meta_path = directory / f"{source.value}.meta"
        if meta_path.exists():
            for line in meta_path.read_text(encoding="utf-8").splitlines():
                if line.startswith("url="):
                    url = line[len("url="):].strip()
        docs.append(
            GuidelineDocument(source=source, url=url, markdown=md_path.read_text(encoding="utf-8"))
        )
    return docs
