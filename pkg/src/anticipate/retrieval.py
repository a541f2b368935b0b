"""Exemplar embeddings and selection strategies.

The embedding store is a flat text file: the first line is the vector
dimension, every following line is an exemplar id and that many floats,
whitespace separated.  Selection offers plain nearest-neighbour ranking,
maximal marginal relevance (relevance traded against redundancy to the
already-picked set), and seeded random sampling.  All arithmetic is plain
Python floats so selections replay identically everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DimensionMismatchError,
    DuplicateEntryError,
    EmptyPoolError,
    InsufficientExemplarsError,
    MalformedFileError,
    PoolTooSmallError,
    UnknownLabelError,
    ZeroVectorError,
)
from .rng import SplitMix64

Vector = tuple[float, ...]

SELECTION_KINDS = ("mmr", "similarity", "random")


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine similarity; zero vectors have no direction and are rejected."""
    if len(u) != len(v):
        raise DimensionMismatchError(f"{len(u)}-d vs {len(v)}-d vector")
    dot = nu = nv = 0.0
    for x, y in zip(u, v):
        dot += x * y
        nu += x * x
        nv += y * y
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cannot take cosine of a zero vector")
    return dot / (math.sqrt(nu) * math.sqrt(nv))


def _validate_vector(vector: Sequence[float], dimension: int, who: str) -> Vector:
    if len(vector) != dimension:
        raise DimensionMismatchError(
            f"{who}: expected {dimension} components, got {len(vector)}"
        )
    for x in vector:
        if not math.isfinite(x):
            raise MalformedFileError(f"{who}: non-finite component {x!r}")
    return tuple(float(x) for x in vector)


@dataclass
class EmbeddingStore:
    """Exemplar id to fixed-dimension vector map."""

    dimension: int
    _vectors: dict[str, Vector] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dimension <= 0:
            raise MalformedFileError(
                f"embedding dimension must be positive, got {self.dimension}"
            )

    def add(self, exemplar_id: str, vector: Sequence[float]) -> None:
        if exemplar_id in self._vectors:
            raise DuplicateEntryError(f"duplicate embedding id {exemplar_id!r}")
        self._vectors[exemplar_id] = _validate_vector(
            vector, self.dimension, f"embedding {exemplar_id!r}"
        )

    def vector(self, exemplar_id: str) -> Vector:
        try:
            return self._vectors[exemplar_id]
        except KeyError:
            raise UnknownLabelError(
                f"no embedding for exemplar {exemplar_id!r}"
            ) from None

    def __contains__(self, exemplar_id: str) -> bool:
        return exemplar_id in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def ids(self) -> list[str]:
        return sorted(self._vectors)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingStore":
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise MalformedFileError(f"cannot read embeddings {path}: {exc}") from exc
        if not lines:
            raise MalformedFileError(f"embeddings {path}: empty file")
        try:
            dimension = int(lines[0].strip())
        except ValueError as exc:
            raise MalformedFileError(
                f"embeddings {path}: first line must be the dimension"
            ) from exc
        store = cls(dimension)
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != dimension + 1:
                raise MalformedFileError(
                    f"embeddings {path}:{lineno}: expected id plus "
                    f"{dimension} floats, got {len(parts)} fields"
                )
            try:
                vector = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise MalformedFileError(
                    f"embeddings {path}:{lineno}: {exc}"
                ) from exc
            store.add(parts[0], vector)
        return store

    def save(self, path: str | Path) -> None:
        lines = [str(self.dimension)]
        for exemplar_id in self.ids():
            floats = " ".join(repr(x) for x in self._vectors[exemplar_id])
            lines.append(f"{exemplar_id} {floats}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _candidates(
    store: EmbeddingStore, ids: Iterable[str] | None
) -> list[str]:
    pool = store.ids() if ids is None else sorted(ids)
    if not pool:
        raise EmptyPoolError("no exemplar candidates to select from")
    for exemplar_id in pool:
        if exemplar_id not in store:
            raise UnknownLabelError(f"no embedding for exemplar {exemplar_id!r}")
    return pool


def select_similar(
    query: Sequence[float],
    store: EmbeddingStore,
    count: int,
    ids: Iterable[str] | None = None,
) -> list[str]:
    """The ``count`` nearest exemplars by cosine, ties to the lowest id."""
    pool = _candidates(store, ids)
    if count > len(pool):
        raise PoolTooSmallError(f"asked for {count} of {len(pool)} exemplars")
    ranked = sorted(pool, key=lambda e: (-cosine(query, store.vector(e)), e))
    return ranked[:count]


def select_mmr(
    query: Sequence[float],
    store: EmbeddingStore,
    count: int,
    lam: float,
    ids: Iterable[str] | None = None,
) -> list[str]:
    """Greedy maximal marginal relevance selection.

    Each step adds the candidate maximizing
    lam * sim(query, c) - (1 - lam) * max(sim(s, c) for selected s),
    the max term being 0 on the first step.  Candidates are scanned in
    ascending id order and only a strictly better score displaces the
    leader, so ties resolve to the lowest id.
    """
    if not 0.0 <= lam <= 1.0:
        raise MalformedFileError(f"mmr tradeoff must be in [0, 1], got {lam}")
    pool = _candidates(store, ids)
    if count > len(pool):
        raise PoolTooSmallError(f"asked for {count} of {len(pool)} exemplars")
    relevance = {e: cosine(query, store.vector(e)) for e in pool}
    # Running max similarity of each candidate to the selected set; None
    # while the set is empty (the max term only appears once something is
    # selected, and it may legitimately be negative).  Incremental max()
    # over the same cosines the from-scratch version would take, so the
    # two are float-for-float identical.
    redundancy: dict[str, float | None] = {e: None for e in pool}
    selected: list[str] = []
    remaining = list(pool)
    while len(selected) < count:
        best_id = None
        best_score = None
        for cand in remaining:
            penalty = redundancy[cand]
            score = lam * relevance[cand] - (1.0 - lam) * (
                penalty if penalty is not None else 0.0
            )
            if best_score is None or score > best_score:
                best_score = score
                best_id = cand
        selected.append(best_id)
        remaining.remove(best_id)
        picked_vec = store.vector(best_id)
        for cand in remaining:
            sim = cosine(picked_vec, store.vector(cand))
            cur = redundancy[cand]
            if cur is None or sim > cur:
                redundancy[cand] = sim
    return selected


def select_random(
    ids: Iterable[str], count: int, seed: int
) -> list[str]:
    """Seeded sample without replacement from the sorted candidate ids."""
    pool = sorted(ids)
    if not pool:
        raise EmptyPoolError("no exemplar candidates to select from")
    if count > len(pool):
        raise PoolTooSmallError(f"asked for {count} of {len(pool)} exemplars")
    return SplitMix64(seed).sample_without_replacement(pool, count)


def partition_groups(
    selected: Sequence[str], groups: int, group_size: int
) -> list[list[str]]:
    """Cut a selection into consecutive disjoint groups, in rank order."""
    needed = groups * group_size
    if len(selected) < needed:
        raise InsufficientExemplarsError(
            f"need {needed} exemplars for {groups} groups of {group_size}, "
            f"have {len(selected)}"
        )
    return [
        list(selected[i * group_size : (i + 1) * group_size])
        for i in range(groups)
    ]
