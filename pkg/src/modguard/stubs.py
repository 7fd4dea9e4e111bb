"""Deterministic in-process stand-ins for the external endpoints.

These let the evaluation harness, the CLI's stub mode, and the test suite
run with zero live endpoints. Every stub derives its randomness from a
per-text hash, so results are reproducible and independent of call order.
"""

from __future__ import annotations

import hashlib
import json
import random

import numpy as np

from .core import Label, Post, negate
from .errors import EmptyText
from .tools import ClassifierVerdict, ReasoningInput, ReasoningOutput, SlangDefinition
from .vector_index import DEFAULT_DIMENSION, l2_normalize


def _seed_for(text: str, salt: str) -> int:
    digest = hashlib.sha256((salt + "\x00" + text).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class HashingEmbedder:
    """Maps text to a deterministic unit vector; identical text embeds to
    the identical vector, so self-retrieval scores exactly 1.0."""

    def __init__(self, dimension: int = DEFAULT_DIMENSION, salt: str = "embed"):
        self.dimension = dimension
        self.salt = salt

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise EmptyText("cannot embed empty text")
        rng = np.random.default_rng(_seed_for(text, self.salt))
        return l2_normalize(rng.standard_normal(self.dimension).astype(np.float32))

    def embed_batch(self, texts):
        return [self.embed(t) for t in texts]


class StubClassifier:
    """Emits the true label with probability ``accuracy`` (symmetric noise).

    ``truth`` maps post text to its gold label.
    """

    def __init__(self, truth, accuracy: float = 1.0, salt: str = "clf"):
        self.truth = truth
        self.accuracy = accuracy
        self.salt = salt

    def classify(self, text: str) -> ClassifierVerdict:
        if not text.strip():
            raise EmptyText("cannot classify empty text")
        rng = random.Random(_seed_for(text, self.salt))
        label = self.truth(text)
        if rng.random() >= self.accuracy:
            label = negate(label)
        p_hate = rng.uniform(0.5, 1.0) if label is Label.HATE else rng.uniform(0.0, 0.4999)
        return ClassifierVerdict(label=label, probability=p_hate)


class StubReasoner:
    """Reasoning stub with tunable accuracy, same noise model as above."""

    def __init__(self, truth, accuracy: float = 1.0, salt: str = "reason"):
        self.truth = truth
        self.accuracy = accuracy
        self.salt = salt

    def reason(self, inp: ReasoningInput) -> ReasoningOutput:
        rng = random.Random(_seed_for(inp.post_text, self.salt))
        label = self.truth(inp.post_text)
        if rng.random() >= self.accuracy:
            label = negate(label)
        return ReasoningOutput(
            rationale=f"stub rationale for a {label.value} post",
            suggested_label=label,
            suggested_confidence=rng.uniform(0.6, 0.99),
        )


class StubDictionary:
    """Serves canned definitions from a term -> [SlangDefinition] mapping."""

    def __init__(self, entries: dict[str, list[SlangDefinition]] | None = None):
        self.entries = entries or {}

    def lookup_slang(self, term: str) -> list[SlangDefinition]:
        term = term.strip().lower()
        hits = sorted(self.entries.get(term, []), key=lambda d: -d.approval_score)
        return hits[:3]


class StubPlannerEndpoint:
    """Direct-judgement planner used for the no-tools configuration."""

    def __init__(self, truth, accuracy: float = 1.0, salt: str = "planner"):
        self.truth = truth
        self.accuracy = accuracy
        self.salt = salt

    def complete(self, prompt: str) -> str:
        post_text = _post_text_from_prompt(prompt)
        rng = random.Random(_seed_for(post_text, self.salt))
        label = self.truth(post_text)
        if rng.random() >= self.accuracy:
            label = negate(label)
        final = {
            "label": label.value,
            "confidence": round(rng.uniform(0.5, 0.99), 4),
            "explanation": f"direct stub judgement: {label.value}",
        }
        return "ACTION: finalize\nFINAL: " + json.dumps(final)


def _post_text_from_prompt(prompt: str) -> str:
    for line in prompt.splitlines():
        if line.startswith("POST ["):
            return line.split("]: ", 1)[1]
    return prompt


class CountingClock:
    """Monotonic fake clock advancing a fixed step per call; makes trace
    timestamps and durations byte-identical across runs."""

    def __init__(self, step: float = 0.001):
        self.step = step
        self._now = 0.0

    def __call__(self) -> float:
        self._now += self.step
        return self._now


def make_synthetic_corpus(
    n: int, hate_fraction: float = 0.5, seed: int = 0
) -> tuple[list[tuple[Post, Label]], dict[str, Label]]:
    """Balanced synthetic posts with a truth map keyed by text."""
    rng = random.Random(seed)
    corpus: list[tuple[Post, Label]] = []
    truth: dict[str, Label] = {}
    n_hate = round(n * hate_fraction)
    labels = [Label.HATE] * n_hate + [Label.NOT_HATE] * (n - n_hate)
    rng.shuffle(labels)
    for i, label in enumerate(labels):
        text = f"synthetic post {i:05d} token {rng.randrange(10**6):06d}"
        post = Post(id=f"syn-{i:05d}", text=text)
        corpus.append((post, label))
        truth[text] = label
    return corpus, truth
