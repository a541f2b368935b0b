"""Closed verb/noun vocabularies and lexical matching against free text.

The taxonomy file is a JSON document with two ordered string arrays,
``verbs`` and ``nouns``; the position of an entry is its canonical id.
Entries are lowercased and whitespace-normalized on load, and may contain
spaces ("turn on", "tape measure").
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import (
    DuplicateEntryError,
    IdOutOfRangeError,
    MalformedFileError,
)

VERB = "verb"
NOUN = "noun"


def _normalize(entry: str) -> str:
    return " ".join(entry.lower().split())


@dataclass(frozen=True)
class ActionLabel:
    """One action as a (verb id, noun id) pair into a taxonomy."""

    verb_id: int
    noun_id: int


ActionSequence = list[ActionLabel]


@dataclass
class Taxonomy:
    """Ordered verb and noun vocabularies; immutable after load.

    Matching patterns are compiled lazily per lexicon and cached, so
    concurrent reads after the first match are safe.
    """

    verbs: list[str]
    nouns: list[str]
    _patterns: dict[str, list[re.Pattern]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        for kind, entries in ((VERB, self.verbs), (NOUN, self.nouns)):
            seen: set[str] = set()
            for entry in entries:
                if not entry:
                    raise MalformedFileError(f"empty {kind} entry in taxonomy")
                if entry != _normalize(entry):
                    raise MalformedFileError(
                        f"{kind} entry {entry!r} is not normalized"
                    )
                if entry in seen:
                    raise DuplicateEntryError(f"duplicate {kind} entry {entry!r}")
                seen.add(entry)

    def lexicon(self, kind: str) -> list[str]:
        if kind == VERB:
            return self.verbs
        if kind == NOUN:
            return self.nouns
        raise ValueError(f"unknown lexicon kind {kind!r}")

    def _lexicon_patterns(self, kind: str) -> list[re.Pattern]:
        cached = self._patterns.get(kind)
        if cached is None:
            # Custom boundaries instead of \b: entries may start/end on any
            # character class, and "take" must not match inside "taken".
            cached = [
                re.compile(
                    r"(?<![a-z0-9])" + re.escape(entry) + r"(?![a-z0-9])"
                )
                for entry in self.lexicon(kind)
            ]
            self._patterns[kind] = cached
        return cached

    def validate_label(self, label: ActionLabel) -> None:
        if not 0 <= label.verb_id < len(self.verbs):
            raise IdOutOfRangeError(
                f"verb_id {label.verb_id} outside 0..{len(self.verbs) - 1}"
            )
        if not 0 <= label.noun_id < len(self.nouns):
            raise IdOutOfRangeError(
                f"noun_id {label.noun_id} outside 0..{len(self.nouns) - 1}"
            )


def load_taxonomy(path: str | Path) -> Taxonomy:
    """Load a taxonomy file; ids are assigned by file order."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFileError(f"cannot read taxonomy {path}: {exc}") from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("verbs"), list) \
            or not isinstance(raw.get("nouns"), list):
        raise MalformedFileError(
            f"taxonomy {path} must be an object with 'verbs' and 'nouns' arrays"
        )
    for key in ("verbs", "nouns"):
        for entry in raw[key]:
            if not isinstance(entry, str):
                raise MalformedFileError(f"non-string {key} entry {entry!r}")
    return Taxonomy(
        verbs=[_normalize(v) for v in raw["verbs"]],
        nouns=[_normalize(n) for n in raw["nouns"]],
    )


def longest_match(
    text: str, tax: Taxonomy, kind: str
) -> tuple[int, tuple[int, int]] | None:
    """Best lexicon entry occurring in ``text`` at word boundaries.

    Longest entry wins; equal lengths break toward the lowest id.  Returns
    ``(id, (start, end))`` for the entry's leftmost occurrence, or ``None``
    when nothing matches.  ``text`` is expected to be lowercase already.
    """
    entries = tax.lexicon(kind)
    best: tuple[int, tuple[int, int]] | None = None
    best_len = 0
    for entry_id, pattern in enumerate(tax._lexicon_patterns(kind)):
        if len(entries[entry_id]) <= best_len:
            continue
        found = pattern.search(text)
        if found is not None:
            best = (entry_id, (found.start(), found.end()))
            best_len = len(entries[entry_id])
    return best


def label_to_text(label: ActionLabel, tax: Taxonomy) -> str:
    """Render one label as ``(<verb>, <noun>)`` with the canonical strings."""
    tax.validate_label(label)
    return f"({tax.verbs[label.verb_id]}, {tax.nouns[label.noun_id]})"


def sequence_to_text(labels: Sequence[ActionLabel], tax: Taxonomy) -> str:
    """Comma-join labels; the serialization used inside prompts."""
    return ", ".join(label_to_text(label, tax) for label in labels)
