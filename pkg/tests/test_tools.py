import httpx
import numpy as np
import pytest

from modguard.core import Label, Tool
from modguard.errors import (
    EmptyTerm,
    EndpointUnavailable,
    MalformedResponse,
    UnparseableRationale,
)
from modguard.stubs import HashingEmbedder
from modguard.tools import (
    ClassifierVerdict,
    HttpClassifier,
    HttpReasoner,
    HttpSlangDictionary,
    ReasoningInput,
    SimilarPostsTool,
    SlangDefinition,
    TraceRecorder,
    extract_candidate_terms,
    parse_reasoning_response,
    render_reasoning_prompt,
)
from modguard.vector_index import IndexedExample, VectorIndex

from conftest import brute_force_top_k


def classifier_with(probability):
    def handler(request):
        return httpx.Response(200, json={"label": "x", "probability": probability})

    return HttpClassifier("http://clf.test", transport=httpx.MockTransport(handler))


class TestClassifier:
    def test_above_threshold(self):
        verdict = classifier_with(0.93).classify("some text")
        assert verdict == ClassifierVerdict(label=Label.HATE, probability=0.93)

    def test_below_threshold(self):
        verdict = classifier_with(0.12).classify("some text")
        assert verdict.label is Label.NOT_HATE

    def test_out_of_range_probability_is_malformed(self):
        with pytest.raises(MalformedResponse):
            classifier_with(1.3).classify("some text")

    def test_label_consistent_with_threshold_for_many_probabilities(self):
        for p in np.linspace(0.0, 1.0, 21):
            verdict = classifier_with(float(p)).classify("t")
            assert (verdict.label is Label.HATE) == (p >= 0.5)

    def test_endpoint_down(self):
        def handler(request):
            raise httpx.ConnectError("refused")

        client = HttpClassifier("http://clf.test", transport=httpx.MockTransport(handler))
        with pytest.raises(EndpointUnavailable):
            client.classify("text")


class TestSimilarPostsTool:
    def _tool(self, texts_labels, dim=32):
        embedder = HashingEmbedder(dim)
        index = VectorIndex(dimension=dim)
        for i, (text, label) in enumerate(texts_labels):
            index.upsert(
                IndexedExample(
                    record_id=f"r{i:04d}", text=text, label=label, vector=embedder.embed(text)
                )
            )
        return SimilarPostsTool(index, embedder), index, embedder

    def test_identical_text_ranks_first_with_score_one(self):
        tool, _, _ = self._tool(
            [("hello there", Label.NOT_HATE), ("other post", Label.HATE)]
        )
        hits = tool.similar_posts("hello there")
        assert hits[0].text == "hello there"
        assert hits[0].score == pytest.approx(1.0)

    def test_truncation_below_k(self):
        tool, _, _ = self._tool([(f"post {i}", Label.NOT_HATE) for i in range(3)])
        assert len(tool.similar_posts("anything", k=5)) == 3

    def test_delegation_matches_oracle(self):
        pairs = [(f"fixture post number {i}", Label.HATE if i % 3 == 0 else Label.NOT_HATE) for i in range(100)]
        tool, index, embedder = self._tool(pairs)
        records = [
            (r.record_id, r.text, r.label, r.vector.tolist()) for r in index._records
        ]
        for query in ("fixture post number 3", "completely new text", "another query"):
            got = tool.similar_posts(query, k=5)
            expected = brute_force_top_k(records, embedder.embed(query).tolist(), 5)
            assert [h.text for h in got] == [text for _score, _rid, text, _label in expected]


def dictionary_with(entries):
    def handler(request):
        return httpx.Response(200, json={"list": entries})

    return HttpSlangDictionary("http://dict.test", transport=httpx.MockTransport(handler))


class TestSlangDictionary:
    def test_cap_three_sorted_by_net_votes(self):
        entries = [
            {"definition": f"def{i}", "example": "", "thumbs_up": up, "thumbs_down": 0}
            for i, up in enumerate([10, 50, 3, 50, 1])
        ]
        defs = dictionary_with(entries).lookup_slang("term")
        assert [d.approval_score for d in defs] == [50, 50, 10]
        # ties keep response order
        assert [d.definition for d in defs] == ["def1", "def3", "def0"]

    def test_unknown_term_gives_empty_list(self):
        assert dictionary_with([]).lookup_slang("zzz") == []

    def test_whitespace_term_rejected(self):
        with pytest.raises(EmptyTerm):
            dictionary_with([]).lookup_slang("   ")

    def test_net_votes_subtract_downvotes(self):
        entries = [
            {"definition": "a", "thumbs_up": 10, "thumbs_down": 8},
            {"definition": "b", "thumbs_up": 5, "thumbs_down": 0},
        ]
        defs = dictionary_with(entries).lookup_slang("t")
        assert [d.definition for d in defs] == ["b", "a"]


class TestExtractCandidateTerms:
    @pytest.fixture
    def wordlist(self, fixtures_dir):
        from modguard.tools import load_wordlist

        return load_wordlist(fixtures_dir / "wordlist.txt")

    def test_unknown_slang_extracted_in_order(self, wordlist):
        assert extract_candidate_terms("you are a sigma grindset npc", wordlist) == [
            "sigma",
            "grindset",
            "npc",
        ]

    def test_all_known_words_give_empty(self, wordlist):
        assert extract_candidate_terms("you are a good day", wordlist) == []

    def test_cap_at_three(self, wordlist):
        text = "blorp zonku fleeb wuggle snarfle quixo"
        assert len(extract_candidate_terms(text, wordlist)) == 3

    def test_short_tokens_ignored(self, wordlist):
        assert extract_candidate_terms("xy zq", wordlist) == []


class TestReasoning:
    def test_happy_path_parse(self):
        out = parse_reasoning_response("LABEL: hate\nCONF: 0.8\nRATIONALE: targets group")
        assert out.suggested_label is Label.HATE
        assert out.suggested_confidence == 0.8
        assert out.rationale == "targets group"

    def test_missing_label_marker(self):
        with pytest.raises(UnparseableRationale):
            parse_reasoning_response("CONF: 0.8\nRATIONALE: hmm")

    def test_prompt_contains_one_line_per_similar_post(self):
        from modguard.vector_index import SimilarPost

        hits = tuple(
            SimilarPost(text=f"post {i}", score=0.9 - i * 0.1, label=Label.NOT_HATE)
            for i in range(5)
        )
        prompt = render_reasoning_prompt(ReasoningInput(post_text="hello", similar_posts=hits))
        evidence_lines = [l for l in prompt.splitlines() if l.startswith("- (")]
        assert len(evidence_lines) == 5

    def test_http_reasoner_round_trip(self):
        def handler(request):
            return httpx.Response(
                200, json={"text": "LABEL: not_hate\nCONF: 0.7\nRATIONALE: harmless"}
            )

        reasoner = HttpReasoner("http://reason.test", transport=httpx.MockTransport(handler))
        out = reasoner.reason(ReasoningInput(post_text="hi"))
        assert out.suggested_label is Label.NOT_HATE

    def test_more_than_five_similar_posts_rejected(self):
        from modguard.vector_index import SimilarPost

        hits = tuple(
            SimilarPost(text=str(i), score=0.0, label=Label.NOT_HATE) for i in range(6)
        )
        with pytest.raises(ValueError):
            ReasoningInput(post_text="x", similar_posts=hits)


class TestTraceRecorder:
    def test_success_appends_one_ok_event(self):
        recorder = TraceRecorder()
        recorder.record(Tool.CLASSIFIER, lambda: 42, lambda r: f"got {r}")
        assert len(recorder.events) == 1
        event = recorder.events[0]
        assert event.tool is Tool.CLASSIFIER
        assert event.outcome == "ok"
        assert event.duration >= 0

    def test_failure_appends_one_error_event_and_reraises(self):
        recorder = TraceRecorder()
        with pytest.raises(RuntimeError):
            recorder.record(Tool.REASONING, lambda: (_ for _ in ()).throw(RuntimeError("boom")))
        assert len(recorder.events) == 1
        assert recorder.events[0].outcome == "error"
