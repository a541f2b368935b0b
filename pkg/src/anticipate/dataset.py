"""Annotated-video ingestion and observed/future splitting.

The annotation file is JSON: either one split document or an array of them.
A split document looks like::

    {"split": "train",
     "videos": [{"video_id": "v01",
                 "observed_count": 8,
                 "segments": [{"start_s": 0.0, "end_s": 2.0,
                               "verb": "take", "noun": "dough",
                               "narration": "a person is ..."},
                              ...]}]}

Verb/noun strings are resolved against the taxonomy; narrations are
optional.  Exemplar records are derived from the split named ``train``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DuplicateEntryError,
    EmptyVideoError,
    MalformedFileError,
    NonMonotoneSegmentsError,
    UnknownLabelError,
)
from .taxonomy import ActionLabel, ActionSequence, Taxonomy

TRAIN_SPLIT = "train"
OBSERVED_RATIOS = (25, 50, 75)


@dataclass(frozen=True)
class Segment:
    index: int
    start_s: float
    end_s: float
    gt_action: ActionLabel | None = None
    narration: str | None = None


@dataclass
class VideoRecord:
    video_id: str
    segments: list[Segment]
    observed_count: int

    def observed(self) -> list[Segment]:
        return self.segments[: self.observed_count]

    def future_actions(self, z: int) -> ActionSequence:
        """Ground-truth actions of the ``z`` segments after the observed prefix."""
        tail = self.segments[self.observed_count : self.observed_count + z]
        if len(tail) < z:
            raise MalformedFileError(
                f"video {self.video_id} has only {len(tail)} future segments, "
                f"needs {z}"
            )
        actions = []
        for seg in tail:
            if seg.gt_action is None:
                raise MalformedFileError(
                    f"video {self.video_id} segment {seg.index} lacks a label"
                )
            actions.append(seg.gt_action)
        return actions


@dataclass
class ExemplarRecord:
    """One in-context example: what was seen, what was done, what followed."""

    exemplar_id: str
    past_actions: ActionSequence
    future_actions: ActionSequence = field(default_factory=list)
    narrations: list[str] | None = None
    embedding: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.narrations is not None and len(self.narrations) != len(
            self.past_actions
        ):
            raise MalformedFileError(
                f"exemplar {self.exemplar_id}: {len(self.narrations)} narrations "
                f"for {len(self.past_actions)} past actions"
            )


def _resolve(tax: Taxonomy, kind: str, name: str, where: str) -> int:
    entries = tax.lexicon(kind)
    normalized = " ".join(name.lower().split())
    try:
        return entries.index(normalized)
    except ValueError:
        raise UnknownLabelError(f"unknown {kind} {name!r} in {where}") from None


def _parse_video(doc: dict, tax: Taxonomy, split: str) -> VideoRecord:
    try:
        video_id = doc["video_id"]
        observed_count = doc["observed_count"]
        seg_docs = doc["segments"]
    except (TypeError, KeyError) as exc:
        raise MalformedFileError(f"video record missing field: {exc}") from exc
    if not isinstance(seg_docs, list) or not seg_docs:
        raise MalformedFileError(f"video {video_id} has no segments")

    segments: list[Segment] = []
    prev_start = None
    for index, seg in enumerate(seg_docs):
        try:
            start_s = float(seg["start_s"])
            end_s = float(seg["end_s"])
        except (TypeError, KeyError, ValueError) as exc:
            raise MalformedFileError(
                f"video {video_id} segment {index}: {exc}"
            ) from exc
        if not start_s < end_s:
            raise NonMonotoneSegmentsError(
                f"video {video_id} segment {index}: start {start_s} >= end {end_s}"
            )
        if prev_start is not None and start_s < prev_start:
            raise NonMonotoneSegmentsError(
                f"video {video_id} segment {index} starts before segment "
                f"{index - 1}"
            )
        prev_start = start_s
        gt_action = None
        if "verb" in seg or "noun" in seg:
            where = f"{split}/{video_id}/segment {index}"
            gt_action = ActionLabel(
                verb_id=_resolve(tax, "verb", seg["verb"], where),
                noun_id=_resolve(tax, "noun", seg["noun"], where),
            )
        narration = seg.get("narration")
        if narration is not None and not isinstance(narration, str):
            raise MalformedFileError(
                f"video {video_id} segment {index}: narration must be a string"
            )
        segments.append(Segment(index, start_s, end_s, gt_action, narration))

    if not isinstance(observed_count, int) or not 0 < observed_count <= len(
        segments
    ):
        raise MalformedFileError(
            f"video {video_id}: observed_count {observed_count!r} outside "
            f"1..{len(segments)}"
        )
    return VideoRecord(str(video_id), segments, observed_count)


def extract_exemplars(
    videos: Iterable[VideoRecord],
    past_length: int,
    future_length: int,
    mode: str = "sliding",
) -> list[ExemplarRecord]:
    """Cut training videos into (past, future) exemplar windows.

    ``sliding`` emits windows at strides of ``past_length``; ``single``
    emits at most one window per video.  Videos shorter than one full
    window contribute nothing.
    """
    if mode not in ("sliding", "single"):
        raise MalformedFileError(f"unknown exemplar mode {mode!r}")
    span = past_length + future_length
    exemplars: list[ExemplarRecord] = []
    for video in videos:
        total = len(video.segments)
        starts = range(0, total - span + 1, past_length)
        if mode == "single":
            starts = starts[:1]
        for start in starts:
            window = video.segments[start : start + span]
            if any(seg.gt_action is None for seg in window):
                continue
            past = window[:past_length]
            future = window[past_length:]
            narrations = None
            if any(seg.narration for seg in past):
                narrations = [seg.narration or "unknown scene" for seg in past]
            exemplars.append(
                ExemplarRecord(
                    exemplar_id=f"{video.video_id}:{start}",
                    past_actions=[seg.gt_action for seg in past],
                    future_actions=[seg.gt_action for seg in future],
                    narrations=narrations,
                )
            )
    return exemplars


def ingest_dataset(
    path: str | Path,
    tax: Taxonomy,
    exemplar_past: int = 8,
    exemplar_future: int = 20,
    exemplar_mode: str = "sliding",
) -> tuple[list[VideoRecord], list[ExemplarRecord]]:
    """Read an annotation file; returns (evaluation videos, train exemplars).

    Videos in the ``train`` split feed exemplar extraction; videos of every
    other split are returned for prediction/evaluation, in file order.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFileError(f"cannot read annotations {path}: {exc}") from exc
    docs = raw if isinstance(raw, list) else [raw]

    eval_videos: list[VideoRecord] = []
    train_videos: list[VideoRecord] = []
    seen_ids: set[str] = set()
    for doc in docs:
        if not isinstance(doc, dict) or "split" not in doc or "videos" not in doc:
            raise MalformedFileError(
                f"annotations {path}: each document needs 'split' and 'videos'"
            )
        split = str(doc["split"])
        for video_doc in doc["videos"]:
            video = _parse_video(video_doc, tax, split)
            if video.video_id in seen_ids:
                raise DuplicateEntryError(
                    f"annotations {path}: duplicate video_id {video.video_id!r}"
                )
            seen_ids.add(video.video_id)
            (train_videos if split == TRAIN_SPLIT else eval_videos).append(video)

    exemplars = extract_exemplars(
        train_videos, exemplar_past, exemplar_future, exemplar_mode
    )
    return eval_videos, exemplars


def observed_prefix_by_ratio(
    video: VideoRecord, ratio: int
) -> tuple[list[Segment], set[int]]:
    """Split a video at ratio percent of its duration.

    Observed segments are those ending within the prefix (at least the
    first segment); the remaining set collects the distinct verbs of all
    other segments.
    """
    if ratio not in OBSERVED_RATIOS:
        raise ValueError(f"ratio must be one of {OBSERVED_RATIOS}, got {ratio}")
    if not video.segments:
        raise EmptyVideoError(f"video {video.video_id} has no segments")
    horizon = video.segments[-1].end_s * ratio / 100.0
    if horizon <= 0:
        raise EmptyVideoError(f"video {video.video_id} has no duration")
    observed = [seg for seg in video.segments if seg.end_s <= horizon]
    if not observed:
        observed = [video.segments[0]]
    cutoff = len(observed)
    remaining = {
        seg.gt_action.verb_id
        for seg in video.segments[cutoff:]
        if seg.gt_action is not None
    }
    return observed, remaining


def middle_timestamp(seg: Segment) -> float:
    """Midpoint of a segment, in seconds."""
    return (seg.start_s + seg.end_s) / 2.0


def past_actions_of(segments: Sequence[Segment], video_id: str) -> ActionSequence:
    """Ground-truth labels of the given segments; fails on unlabeled ones."""
    actions = []
    for seg in segments:
        if seg.gt_action is None:
            raise MalformedFileError(
                f"video {video_id} segment {seg.index} lacks a ground-truth label"
            )
        actions.append(seg.gt_action)
    return actions
