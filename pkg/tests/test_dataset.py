"""Annotation ingest, exemplar extraction, observed-prefix views."""

from __future__ import annotations

import json

import pytest

from anticipate.dataset import (
    Segment,
    VideoRecord,
    extract_exemplars,
    ingest_dataset,
    middle_timestamp,
    observed_prefix_by_ratio,
    past_actions_of,
)
from anticipate.errors import (
    MalformedFileError,
    NonMonotoneSegmentsError,
    UnknownLabelError,
)

from conftest import label


def seg(verb, noun, start, end, narration=None):
    entry = {"start_s": start, "end_s": end, "verb": verb, "noun": noun}
    if narration is not None:
        entry["narration"] = narration
    return entry


def write_doc(tmp_path, doc, name="data.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def eval_doc(segments, observed_count=2, video_id="v1", split="val"):
    return {
        "split": split,
        "videos": [
            {
                "video_id": video_id,
                "observed_count": observed_count,
                "segments": segments,
            }
        ],
    }


def test_ingest_single_eval_video(tmp_path, tax):
    segments = [
        seg("take", "bowl", 0.0, 2.0, "grabs the bowl"),
        seg("put", "bowl", 2.0, 4.0),
        seg("cut", "tomato", 4.0, 6.0),
    ]
    path = write_doc(tmp_path, eval_doc(segments))
    videos, exemplars = ingest_dataset(path, tax)
    assert exemplars == []
    assert len(videos) == 1
    video = videos[0]
    assert video.video_id == "v1"
    assert video.observed_count == 2
    assert len(video.segments) == 3
    assert video.segments[0].gt_action == label(tax, "take", "bowl")
    assert video.segments[0].narration == "grabs the bowl"
    assert video.segments[1].narration is None
    assert [s.index for s in video.segments] == [0, 1, 2]
    assert video.observed() == list(video.segments[:2])
    assert video.future_actions(1) == [label(tax, "cut", "tomato")]


def test_ingest_array_of_docs(tmp_path, tax):
    train = {
        "split": "train",
        "videos": [
            {
                "video_id": "t1",
                "observed_count": 1,
                "segments": [
                    seg("take", "bowl", 0.0, 1.0),
                    seg("put", "bowl", 1.0, 2.0),
                ],
            }
        ],
    }
    path = write_doc(tmp_path, [train, eval_doc([seg("cut", "tomato", 0.0, 1.0)], 1)])
    videos, exemplars = ingest_dataset(path, tax, exemplar_past=2, exemplar_future=0)
    assert [v.video_id for v in videos] == ["v1"]
    assert [e.exemplar_id for e in exemplars] == ["t1:0"]


def test_ingest_unknown_label(tmp_path, tax):
    path = write_doc(tmp_path, eval_doc([seg("levitate", "bowl", 0.0, 1.0)], 1))
    with pytest.raises(UnknownLabelError) as info:
        ingest_dataset(path, tax)
    assert "levitate" in str(info.value)


def test_ingest_non_monotone(tmp_path, tax):
    segments = [seg("take", "bowl", 3.0, 4.0), seg("put", "bowl", 1.0, 2.0)]
    path = write_doc(tmp_path, eval_doc(segments))
    with pytest.raises(NonMonotoneSegmentsError):
        ingest_dataset(path, tax)


def test_ingest_bad_interval(tmp_path, tax):
    path = write_doc(tmp_path, eval_doc([seg("take", "bowl", 2.0, 2.0)], 1))
    with pytest.raises(NonMonotoneSegmentsError):
        ingest_dataset(path, tax)


def test_ingest_observed_count_out_of_range(tmp_path, tax):
    path = write_doc(tmp_path, eval_doc([seg("take", "bowl", 0.0, 1.0)], 2))
    with pytest.raises(MalformedFileError):
        ingest_dataset(path, tax)
    path = write_doc(tmp_path, eval_doc([seg("take", "bowl", 0.0, 1.0)], 0))
    with pytest.raises(MalformedFileError):
        ingest_dataset(path, tax)


def test_ingest_duplicate_video_id(tmp_path, tax):
    doc = eval_doc([seg("take", "bowl", 0.0, 1.0)], 1)
    doc["videos"].append(dict(doc["videos"][0]))
    path = write_doc(tmp_path, doc)
    from anticipate.errors import DuplicateEntryError

    with pytest.raises(DuplicateEntryError):
        ingest_dataset(path, tax)


def test_future_actions_requires_enough_labels(tax):
    segments = tuple(
        Segment(i, float(i), float(i + 1), label(tax, "take", "bowl"), None)
        for i in range(3)
    )
    video = VideoRecord("v", segments, 2)
    assert video.future_actions(1) == [label(tax, "take", "bowl")]
    with pytest.raises(MalformedFileError):
        video.future_actions(2)


def test_future_actions_requires_labeled(tax):
    segments = (
        Segment(0, 0.0, 1.0, label(tax, "take", "bowl"), None),
        Segment(1, 1.0, 2.0, None, None),
    )
    video = VideoRecord("v", segments, 1)
    with pytest.raises(MalformedFileError):
        video.future_actions(1)


def make_video(tax, pairs, video_id="t", observed_count=1, narrations=None):
    segments = []
    for i, (verb, noun) in enumerate(pairs):
        narration = narrations[i] if narrations else None
        segments.append(
            Segment(i, float(i), float(i + 1), label(tax, verb, noun), narration)
        )
    return VideoRecord(video_id, tuple(segments), observed_count)


def test_extract_exemplars_sliding(tax):
    pairs = [("take", "bowl")] * 7
    video = make_video(tax, pairs)
    out = extract_exemplars([video], past_length=2, future_length=1, mode="sliding")
    # span 3 over 7 segments, stride 2: starts 0, 2, 4
    assert [e.exemplar_id for e in out] == ["t:0", "t:2", "t:4"]
    for e in out:
        assert len(e.past_actions) == 2
        assert len(e.future_actions) == 1
        assert e.narrations is None


def test_extract_exemplars_single(tax):
    video = make_video(tax, [("take", "bowl")] * 7)
    out = extract_exemplars([video], past_length=2, future_length=1, mode="single")
    assert [e.exemplar_id for e in out] == ["t:0"]


def test_extract_exemplars_skips_unlabeled(tax):
    segments = (
        Segment(0, 0.0, 1.0, label(tax, "take", "bowl"), None),
        Segment(1, 1.0, 2.0, None, None),
        Segment(2, 2.0, 3.0, label(tax, "put", "bowl"), None),
        Segment(3, 3.0, 4.0, label(tax, "cut", "tomato"), None),
    )
    video = VideoRecord("t", segments, 1)
    out = extract_exemplars([video], past_length=2, future_length=0, mode="sliding")
    assert [e.exemplar_id for e in out] == ["t:2"]


def test_extract_exemplars_narration_fill(tax):
    pairs = [("take", "bowl"), ("put", "bowl")]
    video = make_video(tax, pairs, narrations=["grabs it", None])
    out = extract_exemplars([video], past_length=2, future_length=0, mode="single")
    assert out[0].narrations == ["grabs it", "unknown scene"]


def test_extract_exemplars_too_short(tax):
    video = make_video(tax, [("take", "bowl")] * 2)
    assert extract_exemplars([video], 2, 1, "sliding") == []


def test_observed_prefix_by_ratio(tax):
    pairs = [
        ("take", "bowl"),
        ("put", "bowl"),
        ("cut", "tomato"),
        ("mix", "bowl"),
    ]
    video = make_video(tax, pairs, observed_count=4)
    # Horizon ends at 4.0; ratio 50 keeps segments ending by 2.0.
    observed, remaining = observed_prefix_by_ratio(video, 50)
    assert [s.index for s in observed] == [0, 1]
    assert remaining == {tax.verbs.index("cut"), tax.verbs.index("mix")}
    observed, remaining = observed_prefix_by_ratio(video, 75)
    assert [s.index for s in observed] == [0, 1, 2]
    assert remaining == {tax.verbs.index("mix")}


def test_observed_prefix_fallback_first_segment(tax):
    video = make_video(tax, [("take", "bowl"), ("put", "bowl")], observed_count=2)
    # Make the first segment end late so no segment fits a 25% horizon.
    segments = (
        Segment(0, 0.0, 1.9, label(tax, "take", "bowl"), None),
        Segment(1, 1.9, 2.0, label(tax, "put", "bowl"), None),
    )
    video = VideoRecord("t", segments, 2)
    observed, remaining = observed_prefix_by_ratio(video, 25)
    assert [s.index for s in observed] == [0]
    assert remaining == {tax.verbs.index("put")}


def test_middle_timestamp():
    s = Segment(0, 1.0, 4.0, None, None)
    assert middle_timestamp(s) == 2.5


def test_past_actions_of(tax):
    segments = [
        Segment(0, 0.0, 1.0, label(tax, "take", "bowl"), None),
        Segment(1, 1.0, 2.0, label(tax, "put", "bowl"), None),
    ]
    assert past_actions_of(segments, "v") == [
        label(tax, "take", "bowl"),
        label(tax, "put", "bowl"),
    ]


def test_past_actions_of_rejects_unlabeled(tax):
    segments = [Segment(0, 0.0, 1.0, None, None)]
    with pytest.raises(MalformedFileError):
        past_actions_of(segments, "v")
