"""Deterministic stand-in models behind the adapter.

Each model derives its output from a hash of the request fields, so a
given request always yields the same response regardless of process,
platform, or call order. They exercise every code path a real backend
would (caption conditioning, seeded sampling, token budgets, embedding
geometry) without weights or devices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_GAMMA = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def fnv1a64(text: str) -> int:
    acc = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        acc = ((acc ^ byte) * 0x100000001B3) & _MASK
    return acc


class _Rng:
    """splitmix64 stream; cheap, stateless to seed, and portable."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def next_float(self) -> float:
        return (self.next_u64() >> 11) / float(1 << 53)

    def choice(self, items):
        return items[self.next_u64() % len(items)]


class ModelError(Exception):
    """Raised when a model cannot be constructed for a request."""


_VERBS = [
    "take", "put", "open", "close", "wash", "cut", "mix", "pour",
    "turn", "move", "peel", "stir",
]
_NOUNS = [
    "plate", "knife", "bowl", "pan", "onion", "cloth", "drawer", "lid",
    "spoon", "board", "cup", "tomato", "oven", "dough", "tap", "jar",
]


@dataclass
class ToyCaptioner:
    """Caption generator conditioned on the request's leading text.

    Prefix conditioning (the text does not end with ``Answer:``) yields a
    caption that begins with that exact text; question conditioning
    yields a bare answer clause.
    """

    def caption(self, video_id: str, timestamp_s: float, conditional_text: str) -> str:
        rng = _Rng(fnv1a64(f"{video_id}@{timestamp_s!r}"))
        clause = f"{rng.choice(_VERBS)}ing the {rng.choice(_NOUNS)}"
        if conditional_text.endswith("Answer:"):
            return f"the person is {clause}"
        if conditional_text:
            return f"{conditional_text} {clause}"
        return f"someone is {clause}"


@dataclass
class ToyEmbedder:
    """Text embedder with a fixed dimension and optional unit norm."""

    dimension: int = 16
    unit_norm: bool = True

    def embed(self, text: str) -> list[float]:
        rng = _Rng(fnv1a64(text))
        vector = [rng.next_float() * 2.0 - 1.0 for _ in range(self.dimension)]
        if self.unit_norm:
            norm = math.sqrt(sum(value * value for value in vector))
            if norm == 0.0:
                vector[0] = 1.0
                norm = 1.0
            vector = [value / norm for value in vector]
        return vector


@dataclass
class ToyCompletionModel:
    """Seeded text completion emitting comma-separated action clauses.

    The same (prompt, seed) pair always yields the same text; different
    seeds diverge. ``max_output_tokens`` caps the word count.
    """

    temperature: float = 1.0

    def complete(self, prompt_text: str, max_output_tokens: int, sampling_seed: int) -> str:
        rng = _Rng(fnv1a64(prompt_text) ^ (sampling_seed & _MASK))
        budget = max(1, max_output_tokens)
        pairs = min(1 + rng.next_u64() % 8, budget // 2)
        if pairs < 1:
            return rng.choice(_VERBS) + "."
        clauses = [f"{rng.choice(_VERBS)} {rng.choice(_NOUNS)}" for _ in range(pairs)]
        return ", ".join(clauses) + "."


@dataclass
class ToyRecognizer:
    """Per-slot verb and noun distributions over fixed label counts."""

    verb_count: int
    noun_count: int

    def _distribution(self, seed: int, count: int) -> list[float]:
        if count == 1:
            return [1.0]
        peak = _Rng(seed).next_u64() % count
        rest = 0.3 / (count - 1)
        return [0.7 if i == peak else rest for i in range(count)]

    def recognize(self, video_id: str, window_start: int, n: int) -> tuple[list[list[float]], list[list[float]]]:
        verb_dists = []
        noun_dists = []
        for slot in range(n):
            base = fnv1a64(f"{video_id}#{window_start + slot}")
            verb_dists.append(self._distribution(base, self.verb_count))
            noun_dists.append(self._distribution(base ^ _GAMMA, self.noun_count))
        return verb_dists, noun_dists


@dataclass
class FailingModel:
    """Test model that always fails; ``exception: memory`` raises OOM."""

    exception: str = "runtime"

    def _raise(self):
        if self.exception == "memory":
            raise MemoryError("simulated out-of-memory")
        raise RuntimeError("simulated generation failure")

    def caption(self, video_id, timestamp_s, conditional_text):
        self._raise()

    def embed(self, text):
        self._raise()

    def complete(self, prompt_text, max_output_tokens, sampling_seed):
        self._raise()

    def recognize(self, video_id, window_start, n):
        self._raise()


def build_model(role: str, spec: dict):
    """Instantiate the model named by ``spec['id']`` for one role."""
    model_id = spec.get("id")
    options = {key: value for key, value in spec.items() if key != "id"}
    try:
        if model_id == "toy-captioner":
            return ToyCaptioner(**options)
        if model_id == "toy-embedder":
            return ToyEmbedder(**options)
        if model_id == "toy-lm":
            return ToyCompletionModel(**options)
        if model_id == "toy-recognizer":
            return ToyRecognizer(**options)
        if model_id == "failing-model":
            return FailingModel(**options)
    except TypeError as exc:
        raise ModelError(f"{role}: bad options for {model_id!r}: {exc}") from exc
    raise ModelError(f"{role}: unknown model id {model_id!r}")
