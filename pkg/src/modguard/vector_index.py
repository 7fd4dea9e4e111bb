"""Embedding client and an exact, persistent nearest-neighbour index.

The index stores labelled posts (or guideline chunk titles) as float32
vectors and answers top-k queries by exhaustive cosine scan. Desk-scale
corpora need no approximation, and exactness lets tests compare against a
brute-force oracle.

Persistence is JSON-lines: a fixed-width header record (dimension, count,
sha256 checksum of the record bytes) followed by one record per line with
the vector as base64-encoded little-endian float32.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import Label
from .errors import (
    CorruptIndexFile,
    DimensionMismatch,
    DuplicateId,
    EmptyText,
    EndpointUnavailable,
    ModerationError,
    ZeroVector,
)

DEFAULT_DIMENSION = 1024
_HEADER_WIDTH = 192  # bytes, newline included; rewritten in place on append


def l2_normalize(vector: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise ZeroVector("cannot normalize the zero vector")
    return (vector / norm).astype(np.float32)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


@dataclass(frozen=True)
class IndexedExample:
    record_id: str
    text: str
    label: Label
    vector: np.ndarray
    provenance: str = "seed_corpus"  # "seed_corpus" | "feedback"


@dataclass(frozen=True)
class SimilarPost:
    text: str
    score: float
    label: Label


@dataclass
class IngestReport:
    ingested: int = 0
    failures: list[tuple[int, str]] = None  # (record index, reason)

    def __post_init__(self):
        if self.failures is None:
            self.failures = []


class VectorIndex:
    """Exact cosine index with optional write-through persistence.

    When ``path`` is given, every upsert appends its record to the file and
    rewrites the header in place, so the append is durable before the call
    returns. Reads are lock-free over immutable snapshots; writes are
    serialized through a single lock.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION, path: str | Path | None = None):
        self.dimension = dimension
        self._lock = threading.Lock()
        self._records: list[IndexedExample] = []
        self._ids: set[str] = set()
        self._matrix: np.ndarray | None = None  # row-stacked vectors, lazily built
        self._path = Path(path) if path is not None else None
        self._hash = hashlib.sha256()
        if self._path is not None:
            if self._path.exists():
                self._load_from(self._path)
            else:
                self._path.parent.mkdir(parents=True, exist_ok=True)
                with open(self._path, "wb") as fh:
                    fh.write(self._header_bytes())

    # -- queries ----------------------------------------------------------

    def count(self) -> int:
        return len(self._records)

    def record_ids(self) -> list[str]:
        return [r.record_id for r in self._records]

    def get(self, record_id: str) -> IndexedExample | None:
        for r in self._records:
            if r.record_id == record_id:
                return r
        return None

    def top_k(self, query: np.ndarray, k: int = 5) -> list[SimilarPost]:
        """Return up to ``k`` nearest records by cosine, score descending.

        Ties are broken by ascending record_id so rankings are deterministic.
        """
        return [
            SimilarPost(text=r.text, score=score, label=r.label)
            for r, score in self.top_k_records(query, k=k)
        ]

    def top_k_records(self, query: np.ndarray, k: int = 5) -> list[tuple[IndexedExample, float]]:
        """Like :meth:`top_k` but returns the full stored records."""
        if k < 1:
            raise ValueError("k must be >= 1")
        query = np.asarray(query, dtype=np.float32)
        if query.shape != (self.dimension,):
            raise DimensionMismatch(
                f"query has dimension {query.shape}, index expects {self.dimension}"
            )
        records = self._records
        if not records:
            return []
        matrix = self._get_matrix()
        qnorm = float(np.linalg.norm(query))
        if qnorm == 0.0:
            raise ZeroVector("query vector is zero")
        row_norms = np.linalg.norm(matrix, axis=1)
        scores = (matrix @ query) / (row_norms * qnorm)
        order = sorted(range(len(records)), key=lambda i: (-scores[i], records[i].record_id))
        return [(records[i], float(scores[i])) for i in order[:k]]

    def _get_matrix(self) -> np.ndarray:
        if self._matrix is None or self._matrix.shape[0] != len(self._records):
            self._matrix = np.vstack([r.vector for r in self._records])
        return self._matrix

    # -- writes -----------------------------------------------------------

    def upsert(self, example: IndexedExample) -> str:
        vector = np.asarray(example.vector, dtype=np.float32)
        if vector.shape != (self.dimension,):
            raise DimensionMismatch(
                f"vector has dimension {vector.shape}, index expects {self.dimension}"
            )
        with self._lock:
            if example.record_id in self._ids:
                raise DuplicateId(f"record_id {example.record_id!r} already indexed")
            stored = IndexedExample(
                record_id=example.record_id,
                text=example.text,
                label=example.label,
                vector=vector,
                provenance=example.provenance,
            )
            if self._path is not None:
                self._append_to_disk(stored)
            self._records.append(stored)
            self._ids.add(stored.record_id)
            self._matrix = None
        return stored.record_id

    def ingest_corpus(self, records: Iterable[tuple[str, Label]], embedder) -> IngestReport:
        """Embed and upsert a stream of (text, label) pairs.

        Per-record failures are collected into the report without aborting
        the stream. Fresh record ids are generated per call, so re-ingesting
        the same file appends.
        """
        report = IngestReport()
        for i, (text, label) in enumerate(records):
            try:
                vector = embedder.embed(text)
                self.upsert(
                    IndexedExample(
                        record_id=f"r{len(self._records):08d}",
                        text=text,
                        label=label,
                        vector=vector,
                    )
                )
                report.ingested += 1
            except ModerationError as exc:
                report.failures.append((i, str(exc)))
        return report

    def remove(self, record_ids: set[str]) -> None:
        """Drop records in memory and compact the backing file.

        Used only for startup reconciliation (orphaned feedback rows); the
        normal write path is append-only.
        """
        with self._lock:
            self._records = [r for r in self._records if r.record_id not in record_ids]
            self._ids -= record_ids
            self._matrix = None
            if self._path is not None:
                self._rewrite_file()

    # -- persistence ------------------------------------------------------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha256()
        lines = []
        for record in self._records:
            line = _record_line(record)
            digest.update(line)
            lines.append(line)
        with open(path, "wb") as fh:
            fh.write(_header_line(self.dimension, len(lines), digest.hexdigest()))
            for line in lines:
                fh.write(line)

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        index = cls.__new__(cls)
        index._lock = threading.Lock()
        index._records = []
        index._ids = set()
        index._matrix = None
        index._path = None
        index._hash = hashlib.sha256()
        index.dimension = DEFAULT_DIMENSION
        index._load_from(Path(path))
        return index

    def _load_from(self, path: Path) -> None:
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise CorruptIndexFile(f"cannot read index file {path}: {exc}") from exc
        if len(data) < _HEADER_WIDTH:
            raise CorruptIndexFile(f"index file {path} is truncated")
        try:
            header = json.loads(data[:_HEADER_WIDTH].decode("utf-8").strip())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptIndexFile(f"unreadable header in {path}") from exc
        body = data[_HEADER_WIDTH:]
        digest = hashlib.sha256(body).hexdigest()
        if digest != header["checksum"]:
            raise CorruptIndexFile(f"checksum mismatch in {path}")
        self.dimension = int(header["dimension"])
        records = []
        for raw in body.splitlines():
            if not raw.strip():
                continue
            d = json.loads(raw)
            vector = np.frombuffer(
                base64.b64decode(d["vector"]), dtype="<f4"
            ).astype(np.float32)
            records.append(
                IndexedExample(
                    record_id=d["record_id"],
                    text=d["text"],
                    label=Label(d["label"]),
                    vector=vector,
                    provenance=d.get("provenance", "seed_corpus"),
                )
            )
        if len(records) != int(header["count"]):
            raise CorruptIndexFile(
                f"record count {len(records)} does not match header {header['count']}"
            )
        self._records = records
        self._ids = {r.record_id for r in records}
        self._matrix = None
        self._hash = hashlib.sha256(body)

    def _header_bytes(self) -> bytes:
        return _header_line(self.dimension, len(self._records), self._hash.hexdigest())

    def _append_to_disk(self, record: IndexedExample) -> None:
        line = _record_line(record)
        self._hash.update(line)
        with open(self._path, "r+b") as fh:
            fh.seek(0, 2)
            fh.write(line)
            fh.seek(0)
            fh.write(_header_line(self.dimension, len(self._records) + 1, self._hash.hexdigest()))
            fh.flush()

    def _rewrite_file(self) -> None:
        digest = hashlib.sha256()
        lines = [_record_line(r) for r in self._records]
        for line in lines:
            digest.update(line)
        with open(self._path, "wb") as fh:
            fh.write(_header_line(self.dimension, len(lines), digest.hexdigest()))
            for line in lines:
                fh.write(line)
        self._hash = digest


def _header_line(dimension: int, count: int, checksum: str) -> bytes:
    payload = json.dumps(
        {"dimension": dimension, "count": count, "checksum": checksum}
    ).encode("utf-8")
    if len(payload) >= _HEADER_WIDTH:
        raise ValueError("header payload exceeds fixed width")
    return payload + b" " * (_HEADER_WIDTH - len(payload) - 1) + b"\n"


def _record_line(record: IndexedExample) -> bytes:
    return (
        json.dumps(
            {
                "record_id": record.record_id,
                "text": record.text,
                "label": record.label.value,
                "provenance": record.provenance,
                "vector": base64.b64encode(
                    record.vector.astype("<f4").tobytes()
                ).decode("ascii"),
            },
            ensure_ascii=False,
        ).encode("utf-8")
        + b"\n"
    )


class HttpEmbedder:
    """Client for the external embedding endpoint.

    POST {base_url}/embed with {"texts": [...]} -> {"vectors": [[...], ...]}.
    Vectors are L2-normalized before return so cosine reduces to dot product
    downstream.
    """

    def __init__(
        self,
        base_url: str,
        dimension: int = DEFAULT_DIMENSION,
        timeout: float = 30.0,
        transport=None,
    ):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.dimension = dimension
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        import httpx

        for text in texts:
            if not text.strip():
                raise EmptyText("cannot embed empty text")
        url = f"{self.base_url}/embed"
        try:
            response = self._client.post(url, json={"texts": texts})
        except httpx.HTTPError as exc:
            raise EndpointUnavailable(url, detail=str(exc)) from exc
        if response.status_code != 200:
            raise EndpointUnavailable(url, status=response.status_code)
        try:
            vectors = response.json()["vectors"]
        except (KeyError, ValueError) as exc:
            raise EndpointUnavailable(url, detail="malformed embedding response") from exc
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float32)
            if arr.shape != (self.dimension,):
                raise DimensionMismatch(
                    f"endpoint returned dimension {arr.shape[0] if arr.ndim == 1 else arr.shape},"
                    f" expected {self.dimension}"
                )
            if not np.all(np.isfinite(arr)):
                raise DimensionMismatch("endpoint returned non-finite components")
            out.append(l2_normalize(arr))
        return out


def read_corpus_tsv(path: str | Path) -> Iterator[tuple[str, Label]]:
    """Yield (text, label) pairs from a TSV fixture: id<TAB>label<TAB>text.

    Label column is 0/1 with 1 = hate. Rows with an empty text column are
    yielded as-is so ingest reports them as failures rather than silently
    dropping them; fully blank lines are skipped.
    """
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            _, label, text = line.split("\t", 2)
            yield text, Label.HATE if label == "1" else Label.NOT_HATE
