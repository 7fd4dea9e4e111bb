import json
from pathlib import Path

import pytest

from modguard.core import Label
from modguard.stubs import HashingEmbedder

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def embedder():
    return HashingEmbedder(dimension=32)


def finalize_response(label="hate", confidence=0.9, explanation="targets a protected group", **extra):
    final = {"label": label, "confidence": confidence, "explanation": explanation, **extra}
    return "ACTION: finalize\nFINAL: " + json.dumps(final)


def call_tool_response(tool, **args):
    lines = ["ACTION: call_tool", f"TOOL: {tool}"]
    if args:
        lines.append("ARGS: " + json.dumps(args))
    return "\n".join(lines)


def brute_force_top_k(records, query, k):
    """Independent exhaustive-scan oracle: pure-Python cosine + sort by
    (-score, record_id). Kept free of the index implementation on purpose."""
    import math

    def cosine(a, b):
        dot = sum(x * y for x, y in zip(a, b))
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(y * y for y in b))
        return dot / (na * nb)

    scored = [(cosine(vec, query), rid, text, label) for rid, text, label, vec in records]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return scored[:k]


def oracle_f1(gold, pred):
    """Brute-force confusion-matrix oracle, independent of the harness."""
    tp = sum(1 for g, p in zip(gold, pred) if g is Label.HATE and p is Label.HATE)
    fp = sum(1 for g, p in zip(gold, pred) if g is Label.NOT_HATE and p is Label.HATE)
    fn = sum(1 for g, p in zip(gold, pred) if g is Label.HATE and p is Label.NOT_HATE)
    tn = sum(1 for g, p in zip(gold, pred) if g is Label.NOT_HATE and p is Label.NOT_HATE)

    def f1_from(tp_, fp_, fn_):
        if tp_ == 0:
            return 0.0
        precision = tp_ / (tp_ + fp_)
        recall = tp_ / (tp_ + fn_)
        return 2 * precision * recall / (precision + recall)

    f1_hate = f1_from(tp, fp, fn)
    f1_not = f1_from(tn, fn, fp)
    micro = (tp + tn) / len(gold)
    macro = (f1_hate + f1_not) / 2
    return f1_hate, micro, macro
