import pytest

from modguard.agent import (
    AgentConfig,
    AgentRuntime,
    ScriptedPlanner,
    decide,
    parse_planner_response,
    render_planner_prompt,
    run_fallback,
)
from modguard.core import Label, Post, Tool
from modguard.errors import (
    MalformedResponse,
    NoEvidence,
    RetriesExhausted,
    ToolBudgetExceeded,
)
from modguard.guidelines import GuidelineStore
from modguard.stubs import (
    CountingClock,
    HashingEmbedder,
    StubClassifier,
    StubDictionary,
    StubPlannerEndpoint,
    StubReasoner,
)
from modguard.vector_index import IndexedExample, VectorIndex

from conftest import call_tool_response, finalize_response
from test_guidelines import FixedAnnotator, seven_chunk_docs

POST = Post(id="p1", text="some borderline post marker0001")


def make_runtime(planner=None, *, index_texts=(), classifier_truth=Label.NOT_HATE,
                 with_guidelines=False, dictionary=None, reasoner=None):
    embedder = HashingEmbedder(32)
    index = VectorIndex(dimension=32)
    for i, (text, label) in enumerate(index_texts):
        index.upsert(
            IndexedExample(record_id=f"r{i:04d}", text=text, label=label, vector=embedder.embed(text))
        )
    store = None
    if with_guidelines:
        store = GuidelineStore(dimension=32)
        store.ingest(seven_chunk_docs(), FixedAnnotator(), embedder)
    return AgentRuntime(
        classifier=StubClassifier(lambda t: classifier_truth, accuracy=1.0),
        embedder=embedder,
        post_index=index,
        guideline_store=store,
        dictionary=dictionary or StubDictionary(),
        reasoner=reasoner,
        planner=planner,
        wordlist={"some", "borderline", "post", "the"},
        clock=CountingClock(),
    )


class TestParsePlannerResponse:
    def test_call_tool(self):
        action = parse_planner_response('ACTION: call_tool\nTOOL: classifier\nARGS: {"k": 3}')
        assert action.kind == "call_tool"
        assert action.tool is Tool.CLASSIFIER
        assert action.arguments == {"k": 3}

    def test_finalize(self):
        action = parse_planner_response(finalize_response())
        assert action.kind == "finalize"
        assert action.final["label"] == "hate"

    def test_missing_action_is_malformed(self):
        with pytest.raises(MalformedResponse):
            parse_planner_response("hello")

    def test_unknown_tool_is_malformed(self):
        with pytest.raises(MalformedResponse):
            parse_planner_response("ACTION: call_tool\nTOOL: frobnicator")


class TestDecide:
    def test_scripted_happy_path(self):
        planner = ScriptedPlanner(
            [
                call_tool_response("classifier"),
                call_tool_response("similar_posts"),
                finalize_response("not_hate", 0.8, "looks benign"),
            ]
        )
        runtime = make_runtime(planner, index_texts=[("a post", Label.NOT_HATE)], with_guidelines=True)
        config = AgentConfig()
        decision = decide(POST, config, runtime)
        assert decision.label is Label.NOT_HATE
        assert decision.retries_used == 0
        tools_used = [e.tool for e in decision.trace]
        assert tools_used == [Tool.CLASSIFIER, Tool.SIMILAR_POSTS, Tool.GUIDELINES]
        assert len(decision.guideline_citations) >= 1

    @pytest.mark.parametrize("k", range(6))
    def test_retries_used_counts_invalid_finalizes(self, k):
        responses = [finalize_response(confidence=2.0)] * k + [
            finalize_response("hate", 0.9, "ok now")
        ]
        runtime = make_runtime(ScriptedPlanner(responses))
        decision = decide(POST, AgentConfig(), runtime)
        assert decision.retries_used == k

    def test_six_invalid_finalizes_exhausts_retries(self):
        responses = [finalize_response(confidence=2.0)] * 6
        runtime = make_runtime(ScriptedPlanner(responses))
        with pytest.raises(RetriesExhausted):
            decide(POST, AgentConfig(), runtime)

    def test_disabled_tool_rejected_and_run_continues(self):
        planner = ScriptedPlanner(
            [call_tool_response("reasoning"), finalize_response("not_hate", 0.6, "fine")]
        )
        config = AgentConfig(enabled_tools=frozenset({Tool.CLASSIFIER}))
        runtime = make_runtime(planner)
        decision = decide(POST, config, runtime)
        assert decision.label is Label.NOT_HATE
        assert all(e.tool is not Tool.REASONING for e in decision.trace)

    def test_trace_never_contains_disabled_tools(self):
        planner = ScriptedPlanner(
            [
                call_tool_response("classifier"),
                call_tool_response("similar_posts"),
                call_tool_response("slang_dictionary"),
                finalize_response("hate", 0.7, "because"),
            ]
        )
        config = AgentConfig(
            enabled_tools=frozenset({Tool.CLASSIFIER, Tool.SIMILAR_POSTS})
        )
        decision = decide(POST, config, runtime := make_runtime(planner))
        assert {e.tool for e in decision.trace} <= config.enabled_tools

    def test_tool_budget_enforced(self):
        planner = ScriptedPlanner([call_tool_response("classifier")] * 13)
        config = AgentConfig(max_tool_calls_per_run=12)
        with pytest.raises(ToolBudgetExceeded):
            decide(POST, config, make_runtime(planner))

    def test_deterministic_given_scripted_planner(self):
        def build():
            planner = ScriptedPlanner(
                [
                    call_tool_response("classifier"),
                    finalize_response("hate", 0.9, "repeatable"),
                ]
            )
            return decide(POST, AgentConfig(), make_runtime(planner, with_guidelines=True))

        assert build() == build()


class TestRenderPrompt:
    def test_no_evidence_prompt(self):
        prompt = render_planner_prompt(POST, [], AgentConfig())
        assert "TOOLS:" in prompt
        assert POST.text in prompt
        assert "EVIDENCE" not in prompt

    def test_evidence_block_appears_after_tool(self):
        prompt = render_planner_prompt(POST, ["EVIDENCE classifier: label=hate"], AgentConfig())
        assert "EVIDENCE classifier" in prompt

    def test_disabled_tool_absent_from_roster(self):
        config = AgentConfig(enabled_tools=frozenset({Tool.CLASSIFIER}))
        prompt = render_planner_prompt(POST, [], config)
        roster_line = [l for l in prompt.splitlines() if l.startswith("TOOLS:")][0]
        assert "classifier" in roster_line
        assert "reasoning" not in roster_line


class TestFallback:
    def test_classifier_priority_when_reasoning_disabled(self):
        config = AgentConfig(
            mode="fallback", enabled_tools=frozenset({Tool.CLASSIFIER})
        )
        runtime = make_runtime(classifier_truth=Label.HATE)
        decision = run_fallback(POST, config, runtime)
        assert decision.label is Label.HATE
        verdict_event = decision.trace[0]
        assert verdict_event.tool is Tool.CLASSIFIER

    def test_reasoning_wins_over_classifier(self):
        config = AgentConfig(
            mode="fallback",
            enabled_tools=frozenset({Tool.CLASSIFIER, Tool.REASONING}),
        )
        runtime = make_runtime(
            classifier_truth=Label.NOT_HATE,
            reasoner=StubReasoner(lambda t: Label.HATE, accuracy=1.0),
        )
        decision = run_fallback(POST, config, runtime)
        assert decision.label is Label.HATE

    def test_majority_of_similar_posts(self):
        config = AgentConfig(mode="fallback", enabled_tools=frozenset({Tool.SIMILAR_POSTS}))
        texts = [(f"post {i}", Label.HATE if i < 3 else Label.NOT_HATE) for i in range(5)]
        runtime = make_runtime(index_texts=texts)
        decision = run_fallback(POST, config, runtime)
        assert decision.label is Label.HATE

    def test_tie_breaks_to_not_hate(self):
        config = AgentConfig(mode="fallback", enabled_tools=frozenset({Tool.SIMILAR_POSTS}))
        texts = [(f"post {i}", Label.HATE if i < 2 else Label.NOT_HATE) for i in range(4)]
        runtime = make_runtime(index_texts=texts)
        decision = run_fallback(POST, config, runtime)
        assert decision.label is Label.NOT_HATE

    def test_no_tools_routes_to_planner(self):
        config = AgentConfig(mode="fallback", enabled_tools=frozenset())
        runtime = make_runtime(
            planner=StubPlannerEndpoint(lambda t: Label.HATE, accuracy=1.0)
        )
        decision = run_fallback(POST, config, runtime)
        assert decision.label is Label.HATE
        assert decision.trace == ()

    def test_no_tools_and_no_planner_raises(self):
        config = AgentConfig(mode="fallback", enabled_tools=frozenset())
        with pytest.raises(NoEvidence):
            run_fallback(POST, config, make_runtime())

    def test_every_decision_validates(self):
        from modguard.core import decision_to_dict, validate_decision

        config = AgentConfig(mode="fallback", enabled_tools=frozenset({Tool.CLASSIFIER}))
        decision = run_fallback(POST, config, make_runtime(classifier_truth=Label.HATE))
        assert validate_decision(decision_to_dict(decision)) == decision
