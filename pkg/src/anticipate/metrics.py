"""Evaluation metrics: normalized edit distance and mean average precision.

Edit distance uses optimal string alignment (adjacent transpositions
allowed, but a transposed pair is never edited again).  The unrestricted
Damerau-Levenshtein variant is also available; they differ, e.g. on the
token sequences "c a" vs "a b c" (3 under alignment, 2 unrestricted).
Everything here is plain Python on plain numbers so results are bitwise
reproducible across machines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .errors import (
    EmptySequenceError,
    EmptySplitError,
    LengthMismatchError,
    MalformedFileError,
)
from .taxonomy import ActionSequence

ED_VARIANTS = ("osa", "dl")


@dataclass(frozen=True)
class PredictionSet:
    """K candidate future sequences for one video, all the same length."""

    video_id: str
    sequences: tuple[ActionSequence, ...]

    def __post_init__(self) -> None:
        if not self.sequences:
            raise MalformedFileError(
                f"prediction set for {self.video_id} has no sequences"
            )
        z = len(self.sequences[0])
        if z < 1:
            raise MalformedFileError(
                f"prediction set for {self.video_id} has empty sequences"
            )
        for seq in self.sequences:
            if len(seq) != z:
                raise LengthMismatchError(
                    f"prediction set for {self.video_id} mixes lengths "
                    f"{z} and {len(seq)}"
                )

    @property
    def k(self) -> int:
        return len(self.sequences)

    @property
    def z(self) -> int:
        return len(self.sequences[0])


def osa_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Optimal string alignment distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    # Three rolling rows: two back for the transposition case.
    prev2: list[int] = []
    prev = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        cur = [i] + [0] * len(b)
        for j in range(1, len(b) + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            best = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if (
                i > 1
                and j > 1
                and a[i - 1] == b[j - 2]
                and a[i - 2] == b[j - 1]
            ):
                best = min(best, prev2[j - 2] + 1)
            cur[j] = best
        prev2 = prev
        prev = cur
    return prev[len(b)]


def dl_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Unrestricted Damerau-Levenshtein distance between two sequences."""
    la, lb = len(a), len(b)
    maxdist = la + lb
    # d has two extra border rows; index shift of +1 versus the usual DP.
    d = [[maxdist] * (lb + 2) for _ in range(la + 2)]
    for i in range(la + 1):
        d[i + 1][1] = i
    for j in range(lb + 1):
        d[1][j + 1] = j
    last_row: dict[Hashable, int] = {}
    for i in range(1, la + 1):
        last_col = 0
        for j in range(1, lb + 1):
            k = last_row.get(b[j - 1], 0)
            l = last_col
            if a[i - 1] == b[j - 1]:
                cost = 0
                last_col = j
            else:
                cost = 1
            d[i + 1][j + 1] = min(
                d[i][j] + cost,
                d[i + 1][j] + 1,
                d[i][j + 1] + 1,
                d[k][l] + (i - k - 1) + 1 + (j - l - 1),
            )
        last_row[a[i - 1]] = i
    return d[la + 1][lb + 1]


def _distance(a: Sequence, b: Sequence, variant: str) -> int:
    if variant == "osa":
        return osa_distance(a, b)
    if variant == "dl":
        return dl_distance(a, b)
    raise ValueError(f"unknown edit-distance variant {variant!r}")


@dataclass(frozen=True)
class EdTriple:
    verb_ed: float
    noun_ed: float
    action_ed: float


def sequence_edit_report(
    samples: Sequence[ActionSequence],
    gt: ActionSequence,
    variant: str = "osa",
) -> EdTriple:
    """Best (lowest) normalized edit distance over candidate sequences.

    Each field takes its own minimum: the verb distance may come from a
    different sample than the noun distance.  Distances are divided by
    the ground-truth length.
    """
    if not gt:
        raise EmptySequenceError("ground truth sequence is empty")
    if not samples:
        raise EmptySequenceError("no prediction samples to score")
    for sample in samples:
        if len(sample) != len(gt):
            raise LengthMismatchError(
                f"sample has {len(sample)} actions, ground truth {len(gt)}"
            )
    z = len(gt)
    gt_verbs = [act.verb_id for act in gt]
    gt_nouns = [act.noun_id for act in gt]
    gt_pairs = [(act.verb_id, act.noun_id) for act in gt]
    verb_ed = noun_ed = action_ed = None
    for sample in samples:
        ved = _distance([a.verb_id for a in sample], gt_verbs, variant) / z
        ned = _distance([a.noun_id for a in sample], gt_nouns, variant) / z
        aed = (
            _distance([(a.verb_id, a.noun_id) for a in sample], gt_pairs, variant)
            / z
        )
        verb_ed = ved if verb_ed is None else min(verb_ed, ved)
        noun_ed = ned if noun_ed is None else min(noun_ed, ned)
        action_ed = aed if action_ed is None else min(action_ed, aed)
    return EdTriple(verb_ed, noun_ed, action_ed)


def ed_report(
    preds: PredictionSet, gt: ActionSequence, variant: str = "osa"
) -> EdTriple:
    """Min-over-candidates normalized edit distance for one video."""
    return sequence_edit_report(preds.sequences, gt, variant)


@dataclass(frozen=True)
class EDReport:
    """Per-video edit distances plus their macro average."""

    per_video: dict[str, EdTriple]
    aggregate: EdTriple


def aggregate_ed(per_video: Mapping[str, EdTriple]) -> EDReport:
    """Macro-average over videos, iterated in sorted video-id order."""
    if not per_video:
        raise EmptySequenceError("no videos to aggregate")
    ordered = {vid: per_video[vid] for vid in sorted(per_video)}
    count = len(ordered)
    return EDReport(
        per_video=ordered,
        aggregate=EdTriple(
            verb_ed=sum(t.verb_ed for t in ordered.values()) / count,
            noun_ed=sum(t.noun_ed for t in ordered.values()) / count,
            action_ed=sum(t.action_ed for t in ordered.values()) / count,
        ),
    )


def average_precision(
    scores: Sequence[float], relevant: Sequence[bool]
) -> float:
    """Mean of precision at every relevant rank; 0 when nothing is relevant.

    Ranking is by descending score with the original order breaking ties.
    """
    if len(scores) != len(relevant):
        raise LengthMismatchError(
            f"{len(scores)} scores for {len(relevant)} relevance flags"
        )
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits = 0
    total = 0.0
    for rank, idx in enumerate(order, start=1):
        if relevant[idx]:
            hits += 1
            total += hits / rank
    if hits == 0:
        return 0.0
    return total / hits


def verb_scores(preds: PredictionSet, verb_count: int) -> list[float]:
    """Per-verb occurrence frequency across all sequences and slots."""
    total = preds.k * preds.z
    counts = [0] * verb_count
    for sequence in preds.sequences:
        for act in sequence:
            counts[act.verb_id] += 1
    return [c / total for c in counts]


@dataclass(frozen=True)
class MapSplits:
    """Verb-id class lists to average over; freq/rare may be absent."""

    all_verbs: list[int]
    freq_verbs: list[int] | None = None
    rare_verbs: list[int] | None = None


@dataclass(frozen=True)
class MapReport:
    # ratio -> split name -> mAP (None when no class had a positive video)
    per_ratio: dict[int, dict[str, float | None]]
    aggregate: dict[str, float | None]


def mean_average_precision(
    videos: Sequence[tuple[Sequence[float], set[int]]],
    class_ids: Sequence[int],
) -> float | None:
    """mAP over classes; a class with no positive video is skipped.

    Each video is (per-class scores, set of class ids actually upcoming).
    Returns None when every class was skipped.
    """
    aps = []
    for cls in class_ids:
        flags = [cls in remaining for _, remaining in videos]
        if not any(flags):
            continue
        aps.append(average_precision([vec[cls] for vec, _ in videos], flags))
    if not aps:
        return None
    return sum(aps) / len(aps)


def render_ed_report(report: EDReport, config_json: str) -> str:
    """Deterministic text document: per-video rows plus an aggregate footer."""
    lines = ["# ed-report", f"# config: {config_json}"]
    for video_id, t in report.per_video.items():
        lines.append(
            f"video={video_id} verb_ed={t.verb_ed!r} noun_ed={t.noun_ed!r} "
            f"action_ed={t.action_ed!r}"
        )
    agg = report.aggregate
    lines.append(
        f"aggregate videos={len(report.per_video)} verb_ed={agg.verb_ed!r} "
        f"noun_ed={agg.noun_ed!r} action_ed={agg.action_ed!r}"
    )
    return "\n".join(lines) + "\n"


def ed_report_doc(report: EDReport, config: Mapping) -> dict:
    """The same report as a JSON-ready document."""
    return {
        "kind": "ed-report",
        "config": dict(config),
        "videos": [
            {
                "video_id": video_id,
                "verb_ed": t.verb_ed,
                "noun_ed": t.noun_ed,
                "action_ed": t.action_ed,
            }
            for video_id, t in report.per_video.items()
        ],
        "aggregate": {
            "videos": len(report.per_video),
            "verb_ed": report.aggregate.verb_ed,
            "noun_ed": report.aggregate.noun_ed,
            "action_ed": report.aggregate.action_ed,
        },
    }


def _map_cell(value: float | None) -> str:
    return "n/a" if value is None else repr(value)


def render_map_report(report: MapReport, config_json: str) -> str:
    """Deterministic text document: one row per ratio plus the mean row."""
    lines = ["# map-report", f"# config: {config_json}"]
    for ratio, row in report.per_ratio.items():
        lines.append(
            f"R={ratio} all={_map_cell(row['all'])} "
            f"freq={_map_cell(row['freq'])} rare={_map_cell(row['rare'])}"
        )
    agg = report.aggregate
    lines.append(
        f"aggregate all={_map_cell(agg['all'])} freq={_map_cell(agg['freq'])} "
        f"rare={_map_cell(agg['rare'])}"
    )
    return "\n".join(lines) + "\n"


def map_report_doc(report: MapReport, config: Mapping) -> dict:
    return {
        "kind": "map-report",
        "config": dict(config),
        "ratios": [
            {"ratio": ratio, **row} for ratio, row in report.per_ratio.items()
        ],
        "aggregate": dict(report.aggregate),
    }


def map_report(
    per_ratio: Mapping[int, Sequence[tuple[Sequence[float], set[int]]]],
    splits: MapSplits,
) -> MapReport:
    """mAP per observation ratio and split, plus the mean over ratios."""
    if not splits.all_verbs:
        raise EmptySplitError("the full verb split has no classes")
    named: list[tuple[str, list[int] | None]] = [
        ("all", splits.all_verbs),
        ("freq", splits.freq_verbs),
        ("rare", splits.rare_verbs),
    ]
    ratios: dict[int, dict[str, float | None]] = {}
    for ratio in sorted(per_ratio):
        videos = per_ratio[ratio]
        row: dict[str, float | None] = {}
        for name, class_ids in named:
            if class_ids is None:
                row[name] = None
            else:
                row[name] = mean_average_precision(videos, class_ids)
        ratios[ratio] = row
    aggregate: dict[str, float | None] = {}
    for name, _ in named:
        values = [row[name] for row in ratios.values() if row[name] is not None]
        aggregate[name] = sum(values) / len(values) if values else None
    return MapReport(ratios, aggregate)
