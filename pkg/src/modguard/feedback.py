"""Human-in-the-loop data expansion.

Moderator verdicts are persisted to an append-only JSON-lines log and the
corrected example is appended to the post index with feedback provenance.
Confirming keeps the predicted label; rejecting stores the opposite one.

Atomicity: the index row is written first and the log line is the commit
record. On open, index rows with feedback provenance that have no matching
log line are dropped, so a crash between the two writes leaves neither
visible after reload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .core import AgentDecision, Label, negate
from .errors import DuplicateFeedback, EmptyText, IndexWriteFailure, ModerationError
from .vector_index import IndexedExample, VectorIndex

VERDICTS = ("confirmed", "rejected")


@dataclass(frozen=True)
class FeedbackRecord:
    feedback_id: str
    post_text: str
    predicted_label: Label
    verdict: str  # "confirmed" | "rejected"
    stored_label: Label
    created_at: str  # RFC 3339

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        expected = self.predicted_label if self.verdict == "confirmed" else negate(self.predicted_label)
        if self.stored_label is not expected:
            raise ValueError("stored_label violates the confirm/flip rule")


def resolve_stored_label(predicted: Label, verdict: str) -> Label:
    """Confirmation keeps the prediction; rejection records the opposite."""
    if verdict not in VERDICTS:
        raise ValueError(f"unknown verdict {verdict!r}")
    return predicted if verdict == "confirmed" else negate(predicted)


class FeedbackStore:
    def __init__(self, index: VectorIndex, embedder, log_path: str | Path):
        self.index = index
        self.embedder = embedder
        self.log_path = Path(log_path)
        self._records: list[FeedbackRecord] = []
        self._keys: set[tuple[str, str]] = set()  # (decision post_id, post_text)
        if self.log_path.exists():
            self._replay()
        self._reconcile()

    def _replay(self) -> None:
        for line in self.log_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            record = FeedbackRecord(
                feedback_id=d["feedback_id"],
                post_text=d["post_text"],
                predicted_label=Label(d["predicted_label"]),
                verdict=d["verdict"],
                stored_label=Label(d["stored_label"]),
                created_at=d["created_at"],
            )
            self._records.append(record)
            self._keys.add((d.get("decision_id", ""), record.post_text))

    def _reconcile(self) -> None:
        committed = {f"fb-{r.feedback_id}" for r in self._records}
        orphans = {
            r.record_id
            for r in self.index._records
            if r.provenance == "feedback" and r.record_id not in committed
        }
        if orphans:
            self.index.remove(orphans)

    def apply_feedback(
        self, decision: AgentDecision, post_text: str, verdict: str
    ) -> FeedbackRecord:
        if not post_text.strip():
            raise EmptyText("feedback post text is empty")
        key = (decision.post_id, post_text)
        if key in self._keys:
            raise DuplicateFeedback(
                f"feedback for decision {decision.post_id!r} on this text already recorded"
            )
        stored = resolve_stored_label(decision.label, verdict)
        feedback_id = f"{decision.post_id}-{len(self._records):06d}"
        record = FeedbackRecord(
            feedback_id=feedback_id,
            post_text=post_text,
            predicted_label=decision.label,
            verdict=verdict,
            stored_label=stored,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        try:
            self.index.upsert(
                IndexedExample(
                    record_id=f"fb-{feedback_id}",
                    text=post_text,
                    label=stored,
                    vector=self.embedder.embed(post_text),
                    provenance="feedback",
                )
            )
        except ModerationError as exc:
            raise IndexWriteFailure(f"feedback not recorded: {exc}") from exc
        self._commit(record, decision.post_id)
        return record

    def _commit(self, record: FeedbackRecord, decision_id: str) -> None:
        line = json.dumps(
            {
                "feedback_id": record.feedback_id,
                "decision_id": decision_id,
                "post_text": record.post_text,
                "predicted_label": record.predicted_label.value,
                "verdict": record.verdict,
                "stored_label": record.stored_label.value,
                "created_at": record.created_at,
            },
            ensure_ascii=False,
        )
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
        self._records.append(record)
        self._keys.add((decision_id, record.post_text))

    def list_feedback(self, verdict: str | None = None) -> list[FeedbackRecord]:
        """Records in creation order, optionally filtered by verdict."""
        if verdict is None:
            return list(self._records)
        if verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {verdict!r}")
        return [r for r in self._records if r.verdict == verdict]
