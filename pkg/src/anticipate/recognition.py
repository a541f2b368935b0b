"""Sliding-window action recognition by sampling and majority vote.

A backend scores each length-``n`` window of observed segments with per
slot verb and noun probability vectors.  This module draws ``K`` samples
per slot with a seeded generator, pools the samples of every window slot
covering a segment, and keeps the most frequent (verb, noun) pair, so an
interior segment is decided by up to n x K samples.

Stream layout, fixed for reproducibility: each window owns the generator
seeded with ``seed ^ window_start``; within a window, slots are visited
in order, and each slot draws its K verb ids then its K noun ids, one
uniform per draw, pairing the i-th verb with the i-th noun.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import (
    EmptyPoolError,
    InvalidDistributionError,
    LengthMismatchError,
    MalformedFileError,
)
from .rng import SplitMix64
from .taxonomy import ActionLabel, ActionSequence

SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RecognitionConfig:
    n: int = 4
    stride: int = 1
    k_samples: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise MalformedFileError(f"window length must be >= 1, got {self.n}")
        if self.stride != 1:
            raise MalformedFileError(
                f"only stride 1 is supported, got {self.stride}"
            )
        if self.k_samples < 1:
            raise MalformedFileError(
                f"samples per slot must be >= 1, got {self.k_samples}"
            )


@dataclass
class WindowDistributions:
    window_start: int
    verb_dists: list[list[float]]
    noun_dists: list[list[float]]


@dataclass(frozen=True)
class DrawnSample:
    """One sampled action with the probabilities it was drawn at."""

    verb_id: int
    noun_id: int
    verb_p: float
    noun_p: float

    @property
    def pair(self) -> ActionLabel:
        return ActionLabel(self.verb_id, self.noun_id)


def build_windows(segment_count: int, n: int) -> list[int]:
    """Window start indices covering ``segment_count`` segments.

    Shorter-than-window prefixes get a single window that callers treat
    as left-padded: the missing leading slots alias segment 0.
    """
    if segment_count < 1 or n < 1:
        raise MalformedFileError(
            f"need positive segment count and window length, got "
            f"{segment_count} and {n}"
        )
    if segment_count >= n:
        return list(range(segment_count - n + 1))
    return [0]


def validate_distribution(probs: Sequence[float], where: str) -> None:
    total = 0.0
    for p in probs:
        if p < 0.0:
            raise InvalidDistributionError(f"{where}: negative probability {p}")
        total += p
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise InvalidDistributionError(f"{where}: probabilities sum to {total}")


def sample_window(
    dists: WindowDistributions, k_samples: int, rng: SplitMix64
) -> list[list[DrawnSample]]:
    """K paired verb/noun draws per slot, in the documented stream order."""
    if len(dists.verb_dists) != len(dists.noun_dists):
        raise LengthMismatchError(
            f"window {dists.window_start}: {len(dists.verb_dists)} verb "
            f"slots vs {len(dists.noun_dists)} noun slots"
        )
    slots: list[list[DrawnSample]] = []
    for j, (vdist, ndist) in enumerate(zip(dists.verb_dists, dists.noun_dists)):
        where = f"window {dists.window_start} slot {j}"
        validate_distribution(vdist, where + " verbs")
        validate_distribution(ndist, where + " nouns")
        verb_ids = [rng.categorical(vdist) for _ in range(k_samples)]
        noun_ids = [rng.categorical(ndist) for _ in range(k_samples)]
        slots.append(
            [
                DrawnSample(v, n, vdist[v], ndist[n])
                for v, n in zip(verb_ids, noun_ids)
            ]
        )
    return slots


def vote_top1(pool: Sequence[DrawnSample]) -> ActionLabel:
    """Most frequent pair; ties by summed draw probability, then by id."""
    if not pool:
        raise EmptyPoolError("cannot vote on an empty sample pool")
    counts: dict[ActionLabel, int] = {}
    weights: dict[ActionLabel, float] = {}
    for sample in pool:
        pair = sample.pair
        counts[pair] = counts.get(pair, 0) + 1
        weights[pair] = weights.get(pair, 0.0) + sample.verb_p * sample.noun_p
    return min(
        counts,
        key=lambda pair: (-counts[pair], -weights[pair], pair.verb_id, pair.noun_id),
    )


def recognize_sequence(
    windows: Sequence[WindowDistributions],
    cfg: RecognitionConfig,
    segment_count: int,
) -> ActionSequence:
    """Vote one action per segment from all windows covering it.

    ``windows`` must carry exactly the starts of build_windows, in any
    order; pooling visits covering windows by ascending start and slots
    in ascending order, so the pool order (and hence the tie-break
    weights) is well defined.
    """
    expected = build_windows(segment_count, cfg.n)
    by_start = {w.window_start: w for w in windows}
    if sorted(by_start) != expected or len(windows) != len(expected):
        raise MalformedFileError(
            f"window starts {sorted(by_start)} do not match expected {expected}"
        )

    pad = cfg.n - segment_count if segment_count < cfg.n else 0
    pools: list[list[DrawnSample]] = [[] for _ in range(segment_count)]
    for start in expected:
        rng = SplitMix64(cfg.seed ^ start)
        slots = sample_window(by_start[start], cfg.k_samples, rng)
        if len(slots) != cfg.n:
            raise LengthMismatchError(
                f"window {start} has {len(slots)} slots, expected {cfg.n}"
            )
        for j, samples in enumerate(slots):
            segment = max(0, start + j - pad)
            pools[segment].extend(samples)
    return [vote_top1(pool) for pool in pools]
