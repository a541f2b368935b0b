"""Edit-distance and mAP metrics against independent references."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anticipate.errors import (
    EmptySequenceError,
    EmptySplitError,
    LengthMismatchError,
    MalformedFileError,
)
from anticipate.metrics import (
    EDReport,
    EdTriple,
    MapSplits,
    PredictionSet,
    aggregate_ed,
    average_precision,
    dl_distance,
    ed_report,
    ed_report_doc,
    map_report,
    map_report_doc,
    mean_average_precision,
    osa_distance,
    render_ed_report,
    render_map_report,
    sequence_edit_report,
    verb_scores,
)
from anticipate.taxonomy import ActionLabel

from oracles import average_precision_reference, osa_distance_recursive


def toks(text):
    return text.split()


def test_osa_anchor_tokens():
    # "c a" vs "a b c": transposition is not enough once both symbols are
    # needed elsewhere; the restricted variant pays 3.
    assert osa_distance(toks("c a"), toks("a b c")) == 3
    assert dl_distance(toks("c a"), toks("a b c")) == 2


def test_osa_basics():
    assert osa_distance([], []) == 0
    assert osa_distance([], toks("a b")) == 2
    assert osa_distance(toks("a b"), []) == 2
    assert osa_distance(toks("a b c"), toks("a b c")) == 0
    assert osa_distance(toks("a b"), toks("b a")) == 1
    assert osa_distance(toks("kitten"), toks("sitting")) == 1


def test_osa_matches_recursive_reference():
    rng = random.Random(11)
    alphabet = "abcd"
    for _ in range(300):
        a = tuple(rng.choice(alphabet) for _ in range(rng.randrange(8)))
        b = tuple(rng.choice(alphabet) for _ in range(rng.randrange(8)))
        assert osa_distance(list(a), list(b)) == osa_distance_recursive(a, b)


@given(
    st.lists(st.integers(0, 3), max_size=7),
    st.lists(st.integers(0, 3), max_size=7),
)
@settings(max_examples=200, deadline=None)
def test_osa_symmetry_and_bounds(a, b):
    d = osa_distance(a, b)
    assert d == osa_distance(b, a)
    assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))
    assert dl_distance(a, b) <= d


def test_dl_beats_osa_on_interleaved():
    # ca -> ac -> abc: unrestricted DL may edit between transposed symbols.
    assert dl_distance(list("ca"), list("abc")) == 2
    assert osa_distance(list("ca"), list("abc")) == 3


def labels(pairs):
    return [ActionLabel(v, n) for v, n in pairs]


def test_sequence_edit_report_min_over_samples():
    gt = labels([(0, 0), (1, 1), (2, 2), (3, 3)])
    exact = labels([(0, 0), (1, 1), (2, 2), (3, 3)])
    verb_only = labels([(0, 9), (1, 9), (2, 9), (3, 9)])
    triple = sequence_edit_report([verb_only, exact], gt, "osa")
    assert triple == EdTriple(0.0, 0.0, 0.0)
    triple = sequence_edit_report([verb_only], gt, "osa")
    assert triple.verb_ed == 0.0
    assert triple.noun_ed == 1.0
    assert triple.action_ed == 1.0


def test_sequence_edit_report_independent_fields():
    # Verb minimum comes from one sample, noun minimum from the other.
    gt = labels([(0, 0), (1, 1)])
    good_verbs = labels([(0, 5), (1, 5)])
    good_nouns = labels([(5, 0), (5, 1)])
    triple = sequence_edit_report([good_verbs, good_nouns], gt, "osa")
    assert triple == EdTriple(0.0, 0.0, 1.0)


def test_sequence_edit_report_normalizes_by_length():
    gt = labels([(0, 0), (1, 1), (2, 2), (3, 3)])
    half = labels([(0, 0), (1, 1), (9, 9), (8, 8)])
    triple = sequence_edit_report([half], gt, "osa")
    assert triple == EdTriple(0.5, 0.5, 0.5)


def test_sequence_edit_report_errors():
    gt = labels([(0, 0)])
    with pytest.raises(LengthMismatchError):
        sequence_edit_report([labels([(0, 0), (1, 1)])], gt, "osa")
    with pytest.raises(EmptySequenceError):
        sequence_edit_report([], gt, "osa")
    with pytest.raises(EmptySequenceError):
        sequence_edit_report([labels([(0, 0)])], [], "osa")


def test_prediction_set_validation():
    seq = labels([(0, 0), (1, 1)])
    preds = PredictionSet("v", (seq, seq, seq))
    assert preds.k == 3
    assert preds.z == 2
    with pytest.raises(MalformedFileError):
        PredictionSet("v", ())
    with pytest.raises(LengthMismatchError):
        PredictionSet("v", (seq, labels([(0, 0)])))


def test_ed_report_and_aggregate():
    gt = {
        "a": labels([(0, 0), (1, 1)]),
        "b": labels([(2, 2), (3, 3)]),
    }
    preds = {
        "a": PredictionSet("a", (labels([(0, 0), (1, 1)]),)),
        "b": PredictionSet("b", (labels([(2, 2), (9, 9)]),)),
    }
    per_video = {
        vid: ed_report(preds[vid], gt[vid], "osa") for vid in sorted(gt)
    }
    report = aggregate_ed(per_video)
    assert report.per_video["a"] == EdTriple(0.0, 0.0, 0.0)
    assert report.per_video["b"] == EdTriple(0.5, 0.5, 0.5)
    assert report.aggregate == EdTriple(0.25, 0.25, 0.25)


def test_aggregate_ed_empty():
    with pytest.raises(EmptySequenceError):
        aggregate_ed({})


def test_render_ed_report_shape():
    report = EDReport(
        per_video={"v1": EdTriple(0.5, 0.25, 0.75)},
        aggregate=EdTriple(0.5, 0.25, 0.75),
    )
    text = render_ed_report(report, '{"z":1}')
    lines = text.splitlines()
    assert lines[0] == "# ed-report"
    assert lines[1] == '# config: {"z":1}'
    assert lines[2] == "video=v1 verb_ed=0.5 noun_ed=0.25 action_ed=0.75"
    assert lines[3] == "aggregate videos=1 verb_ed=0.5 noun_ed=0.25 action_ed=0.75"
    assert text.endswith("\n")
    doc = ed_report_doc(report, {"z": 1})
    assert doc["aggregate"]["verb_ed"] == 0.5
    assert doc["videos"][0] == {
        "video_id": "v1", "verb_ed": 0.5, "noun_ed": 0.25, "action_ed": 0.75,
    }
    json.dumps(doc)


def test_average_precision_anchor():
    # Hits land at ranks 1 and 3: AP = (1/1 + 2/3) / 2.
    ap = average_precision([0.9, 0.8, 0.7, 0.6], [True, False, True, False])
    assert ap == pytest.approx((1 / 1 + 2 / 3) / 2, abs=1e-12)


def test_average_precision_tie_breaks_by_index():
    # Equal scores rank by original index, so relevant index 1 sits second.
    assert average_precision([0.5, 0.5], [False, True]) == pytest.approx(0.5)
    assert average_precision([0.5, 0.5], [True, False]) == pytest.approx(1.0)


def test_average_precision_no_relevant():
    assert average_precision([0.9, 0.1], [False, False]) == 0.0


def test_average_precision_matches_reference():
    rng = random.Random(3)
    for _ in range(200):
        n = rng.randrange(1, 12)
        scores = [rng.random() for _ in range(n)]
        relevant = [rng.random() < 0.4 for _ in range(n)]
        assert average_precision(scores, relevant) == pytest.approx(
            average_precision_reference(scores, relevant), abs=1e-12
        )


def test_verb_scores_counts():
    seq1 = labels([(0, 0), (1, 0), (1, 0)])
    seq2 = labels([(1, 0), (1, 0), (2, 0)])
    preds = PredictionSet("v", (seq1, seq2))
    scores = verb_scores(preds, 4)
    assert scores == [1 / 6, 4 / 6, 1 / 6, 0.0]
    assert sum(scores) == pytest.approx(1.0)


def test_mean_average_precision_skips_unrepresented():
    # Class 1 never appears as a positive: it must not drag the mean down.
    videos = [
        ([0.9, 0.1, 0.0], {0}),
        ([0.2, 0.3, 0.5], {2}),
    ]
    result = mean_average_precision(videos, [0, 1, 2])
    ap_cls0 = average_precision([0.9, 0.2], [True, False])
    ap_cls2 = average_precision([0.0, 0.5], [False, True])
    assert result == pytest.approx((ap_cls0 + ap_cls2) / 2)


def test_mean_average_precision_all_skipped():
    videos = [([0.9, 0.1], set())]
    assert mean_average_precision(videos, [0, 1]) is None


def test_map_report_aggregate_and_none():
    splits = MapSplits(all_verbs=[0, 1], freq_verbs=[0], rare_verbs=None)
    per_ratio = {
        25: [([0.9, 0.1], {0}), ([0.1, 0.9], {1})],
        50: [([0.9, 0.1], set()), ([0.1, 0.9], set())],
        75: [([0.2, 0.8], {1})],
    }
    report = map_report(per_ratio, splits)
    assert report.per_ratio[25]["all"] == pytest.approx(1.0)
    assert report.per_ratio[50]["all"] is None
    assert report.per_ratio[75]["all"] == pytest.approx(1.0)
    assert report.per_ratio[25]["rare"] is None
    assert report.aggregate["all"] == pytest.approx(1.0)
    assert report.aggregate["rare"] is None


def test_map_report_empty_split():
    with pytest.raises(EmptySplitError):
        map_report({25: []}, MapSplits(all_verbs=[], freq_verbs=None, rare_verbs=None))


def test_render_map_report_shape():
    splits = MapSplits(all_verbs=[0, 1], freq_verbs=None, rare_verbs=None)
    per_ratio = {25: [([0.9, 0.1], {0})]}
    report = map_report(per_ratio, splits)
    text = render_map_report(report, '{"k":1}')
    lines = text.splitlines()
    assert lines[0] == "# map-report"
    assert lines[1] == '# config: {"k":1}'
    assert lines[2] == "R=25 all=1.0 freq=n/a rare=n/a"
    assert lines[3] == "aggregate all=1.0 freq=n/a rare=n/a"
    doc = map_report_doc(report, {"k": 1})
    assert doc["ratios"][0] == {"ratio": 25, "all": 1.0, "freq": None, "rare": None}
    assert doc["aggregate"]["freq"] is None
    json.dumps(doc)
