import pytest

from modguard.core import AgentDecision, Label, negate
from modguard.errors import DuplicateFeedback, IndexWriteFailure
from modguard.feedback import FeedbackStore, resolve_stored_label
from modguard.stubs import HashingEmbedder
from modguard.vector_index import VectorIndex


def decision(label=Label.HATE, post_id="d1"):
    return AgentDecision(
        post_id=post_id, label=label, confidence=0.9, explanation="because"
    )


@pytest.fixture
def store(tmp_path):
    index = VectorIndex(dimension=32, path=tmp_path / "posts.index")
    return FeedbackStore(index, HashingEmbedder(32), tmp_path / "feedback.jsonl")


@pytest.mark.parametrize(
    "predicted,verdict,expected",
    [
        (Label.HATE, "confirmed", Label.HATE),
        (Label.HATE, "rejected", Label.NOT_HATE),
        (Label.NOT_HATE, "confirmed", Label.NOT_HATE),
        (Label.NOT_HATE, "rejected", Label.HATE),
    ],
)
def test_flip_law_all_four_combinations(store, predicted, verdict, expected):
    record = store.apply_feedback(decision(predicted), "a fed back post", verdict)
    assert record.stored_label is expected
    assert record.stored_label is resolve_stored_label(predicted, verdict)


def test_fed_back_example_is_top_one_self_retrieval(store):
    text = "this exact post came back from a moderator"
    store.apply_feedback(decision(Label.HATE, post_id="dx"), text, "rejected")
    embedder = HashingEmbedder(32)
    hits = store.index.top_k(embedder.embed(text), k=1)
    assert hits[0].text == text
    assert hits[0].score == pytest.approx(1.0)
    assert hits[0].label is Label.NOT_HATE  # flipped by rejection


def test_duplicate_feedback_rejected(store):
    store.apply_feedback(decision(), "same post text", "confirmed")
    with pytest.raises(DuplicateFeedback):
        store.apply_feedback(decision(), "same post text", "rejected")


def test_same_text_different_decision_allowed(store):
    store.apply_feedback(decision(post_id="d1"), "text", "confirmed")
    store.apply_feedback(decision(post_id="d2"), "text", "confirmed")
    assert len(store.list_feedback()) == 2


def test_list_feedback_order_and_filter(store):
    store.apply_feedback(decision(post_id="a"), "one", "confirmed")
    store.apply_feedback(decision(post_id="b"), "two", "rejected")
    store.apply_feedback(decision(post_id="c"), "three", "confirmed")
    records = store.list_feedback()
    assert [r.post_text for r in records] == ["one", "two", "three"]
    assert [r.post_text for r in store.list_feedback("rejected")] == ["two"]
    assert store.list_feedback("confirmed")[0].verdict == "confirmed"


def test_empty_store_lists_nothing(store):
    assert store.list_feedback() == []


def test_records_survive_reload(tmp_path):
    index = VectorIndex(dimension=32, path=tmp_path / "posts.index")
    embedder = HashingEmbedder(32)
    store = FeedbackStore(index, embedder, tmp_path / "feedback.jsonl")
    store.apply_feedback(decision(), "persisted post", "confirmed")

    index2 = VectorIndex(path=tmp_path / "posts.index")
    store2 = FeedbackStore(index2, embedder, tmp_path / "feedback.jsonl")
    assert len(store2.list_feedback()) == 1
    assert index2.count() == 1


def test_crash_between_index_and_log_leaves_neither(tmp_path, monkeypatch):
    index = VectorIndex(dimension=32, path=tmp_path / "posts.index")
    embedder = HashingEmbedder(32)
    store = FeedbackStore(index, embedder, tmp_path / "feedback.jsonl")

    # crash after the index write but before the log commit
    monkeypatch.setattr(
        FeedbackStore, "_commit", lambda self, record, decision_id: (_ for _ in ()).throw(OSError("crash"))
    )
    with pytest.raises(OSError):
        store.apply_feedback(decision(), "lost to a crash", "confirmed")
    monkeypatch.undo()
    assert index.count() == 1  # orphan row exists on disk pre-reload

    index2 = VectorIndex(path=tmp_path / "posts.index")
    store2 = FeedbackStore(index2, embedder, tmp_path / "feedback.jsonl")
    assert store2.list_feedback() == []
    assert index2.count() == 0  # reconciliation dropped the orphan


def test_index_write_failure_records_nothing(tmp_path):
    index = VectorIndex(dimension=16, path=tmp_path / "posts.index")

    class BrokenEmbedder:
        def embed(self, text):
            from modguard.errors import EndpointUnavailable

            raise EndpointUnavailable("http://embed.test")

    store = FeedbackStore(index, BrokenEmbedder(), tmp_path / "feedback.jsonl")
    with pytest.raises(IndexWriteFailure):
        store.apply_feedback(decision(), "cannot embed", "confirmed")
    assert store.list_feedback() == []
    assert index.count() == 0
