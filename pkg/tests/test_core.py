import pytest
from hypothesis import given, strategies as st

from modguard.core import (
    AgentDecision,
    Label,
    Tool,
    ToolTraceEvent,
    decision_to_dict,
    negate,
    validate_decision,
)
from modguard.errors import DecisionValidationError, EmptyText


def test_negate_flips_both_ways():
    assert negate(Label.HATE) is Label.NOT_HATE
    assert negate(Label.NOT_HATE) is Label.HATE


@given(st.sampled_from(list(Label)))
def test_negate_is_an_involution(label):
    assert negate(negate(label)) is label


def test_post_rejects_whitespace_text():
    from modguard.core import Post

    with pytest.raises(EmptyText):
        Post(id="p1", text="   \n\t ")


class TestValidateDecision:
    def test_well_formed_input(self):
        decision = validate_decision(
            {"label": "hate", "confidence": 0.93, "explanation": "slur targets ethnicity"},
            post_id="p1",
        )
        assert decision.label is Label.HATE
        assert decision.confidence == 0.93
        assert decision.retries_used == 0

    def test_out_of_range_confidence(self):
        with pytest.raises(DecisionValidationError) as err:
            validate_decision(
                {"label": "hate", "confidence": 1.7, "explanation": "x"}, post_id="p1"
            )
        assert "out_of_range_confidence" in err.value.problems

    def test_unknown_label(self):
        with pytest.raises(DecisionValidationError) as err:
            validate_decision(
                {"label": "maybe", "confidence": 0.5, "explanation": "x"}, post_id="p1"
            )
        assert "unknown_label" in err.value.problems

    def test_missing_fields_are_all_reported(self):
        with pytest.raises(DecisionValidationError) as err:
            validate_decision({}, post_id="p1")
        assert {"missing_field:label", "missing_field:confidence", "missing_field:explanation"} <= set(
            err.value.problems
        )

    def test_empty_explanation(self):
        with pytest.raises(DecisionValidationError) as err:
            validate_decision(
                {"label": "hate", "confidence": 0.5, "explanation": "  "}, post_id="p1"
            )
        assert "empty_explanation" in err.value.problems

    def test_confidence_must_be_numeric_not_bool(self):
        with pytest.raises(DecisionValidationError):
            validate_decision(
                {"label": "hate", "confidence": True, "explanation": "x"}, post_id="p1"
            )


def _sample_decision():
    return AgentDecision(
        post_id="p7",
        label=Label.NOT_HATE,
        confidence=0.42,
        explanation="benign banter",
        trace=(
            ToolTraceEvent(
                tool=Tool.CLASSIFIER,
                started_at=1.0,
                duration=0.05,
                outcome="ok",
                summary="label=not_hate p=0.1200",
            ),
        ),
        retries_used=2,
    )


def test_serialization_round_trip():
    decision = _sample_decision()
    assert validate_decision(decision_to_dict(decision)) == decision


def test_trace_duration_must_be_non_negative():
    with pytest.raises(ValueError):
        ToolTraceEvent(
            tool=Tool.REASONING, started_at=0.0, duration=-0.1, outcome="ok", summary="x"
        )


def test_retries_capped_at_five():
    with pytest.raises(ValueError):
        AgentDecision(
            post_id="p",
            label=Label.HATE,
            confidence=0.5,
            explanation="x",
            retries_used=6,
        )
