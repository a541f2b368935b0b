"""End-to-end orchestration: observe, caption, select, prompt, parse, score.

For each evaluation video: recognize (or copy) the past actions, caption
the observed segments, embed the rendered query, pick K x m exemplars and
split them into K disjoint groups, send K completion requests with
distinct sampling seeds, and parse each completion into a fixed-length
action sequence.  A failed completion degrades to the repeat baseline for
that slot only; failures in recognition, captioning, or embedding abort
the video because no sound prediction exists without them.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .backend import (
    Backend,
    CaptionRequest,
    CompleteRequest,
    EmbedRequest,
    RecognizeRequest,
    canonical_json,
    caption_of,
    completion_of,
    distributions_of,
    embedding_of,
)
from .baselines import predict_last, predict_repeat, predict_retrieve
from .captioning import attach_narrations, make_caption_requests
from .config import PipelineConfig
from .dataset import (
    OBSERVED_RATIOS,
    ExemplarRecord,
    Segment,
    VideoRecord,
    ingest_dataset,
    observed_prefix_by_ratio,
    past_actions_of,
)
from .errors import (
    ConfigError,
    EmptyPoolError,
    MalformedFileError,
    MissingPredictionError,
)
from .metrics import (
    EDReport,
    MapReport,
    MapSplits,
    PredictionSet,
    aggregate_ed,
    ed_report,
    map_report,
    verb_scores,
)
from .parsing import ParseContext, parse_output
from .prompting import (
    PromptOptions,
    compose_prompt,
    format_instruction,
    render_block,
    top5_nouns,
)
from .recognition import build_windows, recognize_sequence
from .retrieval import (
    EmbeddingStore,
    partition_groups,
    select_mmr,
    select_random,
    select_similar,
)
from .rng import fnv1a64
from .taxonomy import ActionLabel, ActionSequence, Taxonomy, load_taxonomy

log = logging.getLogger(__name__)


@dataclass
class PipelineState:
    """Everything loaded from disk that predictions draw on."""

    cfg: PipelineConfig
    tax: Taxonomy
    videos: list[VideoRecord]
    exemplars: dict[str, ExemplarRecord]
    store: EmbeddingStore | None

    def exemplar_pool(self) -> list[str]:
        """Exemplar ids usable for embedding-based selection, sorted."""
        if self.store is None:
            return []
        return sorted(set(self.store.ids()) & set(self.exemplars))


def load_pipeline(cfg: PipelineConfig) -> PipelineState:
    tax = load_taxonomy(cfg.taxonomy_path)
    videos, exemplar_list = ingest_dataset(
        cfg.annotations_path,
        tax,
        exemplar_past=cfg.exemplar_past,
        exemplar_future=cfg.z,
        exemplar_mode=cfg.exemplar_mode,
    )
    store = (
        EmbeddingStore.load(cfg.embeddings_path)
        if cfg.embeddings_path is not None
        else None
    )
    return PipelineState(
        cfg=cfg,
        tax=tax,
        videos=videos,
        exemplars={ex.exemplar_id: ex for ex in exemplar_list},
        store=store,
    )


def recognize_past(
    video: VideoRecord, state: PipelineState, backend: Backend
) -> tuple[ActionSequence, list[list[float]]]:
    """Recognized actions for the observed prefix plus all noun vectors."""
    cfg = state.cfg
    observed = video.observed()
    starts = build_windows(len(observed), cfg.recognition.n)
    requests = [
        RecognizeRequest(
            video_id=video.video_id, window_start=start, n=cfg.recognition.n
        )
        for start in starts
    ]
    responses = backend.dispatch(requests)
    windows = [
        distributions_of(resp, start, cfg.recognition.n)
        for start, resp in zip(starts, responses)
    ]
    past = recognize_sequence(windows, cfg.recognition, len(observed))
    noun_vectors = [vec for w in windows for vec in w.noun_dists]
    return past, noun_vectors


def _mean_distribution(vectors: Sequence[Sequence[float]]) -> list[float]:
    count = len(vectors)
    width = len(vectors[0])
    return [sum(vec[i] for vec in vectors) / count for i in range(width)]


def _past_noun_distribution(past: ActionSequence, noun_count: int) -> list[float]:
    counts = [0] * noun_count
    for act in past:
        counts[act.noun_id] += 1
    return [c / len(past) for c in counts]


def observed_past(
    video: VideoRecord, state: PipelineState, backend: Backend | None
) -> tuple[ActionSequence, list[list[float]] | None]:
    """Past actions per config: ground truth or recognized from the backend."""
    if state.cfg.oracle_past:
        return past_actions_of(video.observed(), video.video_id), None
    if backend is None:
        raise ConfigError("recognition needs a backend; none configured")
    return recognize_past(video, state, backend)


def caption_video(
    video: VideoRecord, state: PipelineState, backend: Backend
) -> list[str]:
    cfg = state.cfg
    specs = make_caption_requests(
        video, cfg.caption_mode, cfg.prefix_text, cfg.questions
    )
    requests = [
        CaptionRequest(
            video_id=spec.video_id,
            timestamp_s=spec.timestamp_s,
            conditional_text=spec.conditional_text,
        )
        for spec in specs
    ]
    responses = backend.dispatch(requests)
    return attach_narrations(video, [caption_of(r) for r in responses])


def query_record(
    video: VideoRecord, past: ActionSequence, narrations: list[str] | None
) -> ExemplarRecord:
    return ExemplarRecord(
        exemplar_id=f"query:{video.video_id}",
        past_actions=list(past),
        future_actions=[],
        narrations=narrations,
    )


def exemplar_embed_text(
    record: ExemplarRecord, tax: Taxonomy, options: PromptOptions
) -> str:
    """The text embedded for similarity search: the block sans future line.

    Queries and exemplars run through the same renderer so their vectors
    live in the same space.  The candidate-noun line never participates.
    """
    return render_block(record, tax, options, with_future=False)


def select_exemplars(
    video_id: str,
    query_embedding: Sequence[float] | None,
    state: PipelineState,
) -> list[str]:
    """One ranked list of K x m exemplar ids per the configured policy."""
    cfg = state.cfg
    count = cfg.k * cfg.selection.m
    if cfg.selection.kind == "random":
        pool = (
            state.exemplar_pool()
            if state.store is not None
            else sorted(state.exemplars)
        )
        # Mix the video id into the seed so each video draws its own
        # exemplars, reproducibly.
        return select_random(pool, count, cfg.selection.seed ^ fnv1a64(video_id))
    if state.store is None:
        raise ConfigError(
            f"{cfg.selection.kind} selection needs an embeddings file"
        )
    if query_embedding is None:
        raise EmptyPoolError("no query embedding for similarity selection")
    pool = state.exemplar_pool()
    if cfg.selection.kind == "similarity":
        return select_similar(query_embedding, state.store, count, ids=pool)
    return select_mmr(
        query_embedding, state.store, count, cfg.selection.lam, ids=pool
    )


def predict_video(
    video: VideoRecord, state: PipelineState, backend: Backend | None
) -> PredictionSet:
    cfg = state.cfg
    tax = state.tax
    past, noun_vectors = observed_past(video, state, backend)

    narrations = None
    if cfg.prompt.include_captions:
        if backend is None:
            raise ConfigError("captioning needs a backend; none configured")
        narrations = caption_video(video, state, backend)

    query = query_record(video, past, narrations)

    candidate_nouns = None
    if cfg.prompt.include_noun_list:
        if noun_vectors:
            distribution = _mean_distribution(noun_vectors)
        else:
            distribution = _past_noun_distribution(past, len(tax.nouns))
        candidate_nouns = top5_nouns(distribution, tax)

    needs_embedding = cfg.selection.kind in ("mmr", "similarity")
    query_embedding = None
    if needs_embedding:
        if backend is None:
            raise ConfigError("query embedding needs a backend; none configured")
        text = exemplar_embed_text(query, tax, cfg.prompt)
        (response,) = backend.dispatch([EmbedRequest(text=text)])
        query_embedding = embedding_of(response)

    selected = select_exemplars(video.video_id, query_embedding, state)
    groups = partition_groups(selected, cfg.k, cfg.selection.m)

    instruction = format_instruction(cfg.prompt, cfg.z)
    prompts = [
        compose_prompt(
            instruction,
            [state.exemplars[eid] for eid in group],
            query,
            tax,
            cfg.prompt,
            prompt_index=k,
            candidate_nouns=candidate_nouns,
        )
        for k, group in enumerate(groups)
    ]
    if backend is None:
        raise ConfigError("completion needs a backend; none configured")
    requests = [
        CompleteRequest(
            prompt_text=p.text,
            max_output_tokens=cfg.prompt.max_output_tokens,
            sampling_seed=cfg.seed ^ p.prompt_index,
        )
        for p in prompts
    ]
    responses = backend.dispatch(requests)

    ctx = ParseContext(taxonomy=tax, fallback_action=past[-1], z=cfg.z)
    sequences = []
    for k, response in enumerate(responses):
        if response.ok:
            sequences.append(parse_output(completion_of(response), ctx))
        else:
            log.warning(
                "video %s prompt %d failed (%s); using repeat baseline",
                video.video_id,
                k,
                response.error_code,
            )
            sequences.append(
                predict_repeat(video.video_id, past, cfg.z, 1).sequences[0]
            )
    return PredictionSet(video.video_id, tuple(sequences))


def predict_all(
    state: PipelineState, backend: Backend | None
) -> dict[str, PredictionSet]:
    """Predict every evaluation video; aggregation order is by video id."""
    videos = sorted(state.videos, key=lambda v: v.video_id)
    if state.cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=state.cfg.workers) as pool:
            results = list(
                pool.map(lambda v: predict_video(v, state, backend), videos)
            )
    else:
        results = [predict_video(v, state, backend) for v in videos]
    return {ps.video_id: ps for ps in results}


def evaluate_lta(
    videos: Sequence[VideoRecord],
    predictions: dict[str, PredictionSet],
    z: int,
    variant: str = "osa",
) -> EDReport:
    """Per-video min-over-K edit distances, macro-averaged."""
    per_video = {}
    for video in videos:
        if video.video_id not in predictions:
            raise MissingPredictionError(
                f"no prediction set for video {video.video_id}"
            )
        gt = video.future_actions(z)
        per_video[video.video_id] = ed_report(
            predictions[video.video_id], gt, variant
        )
    return aggregate_ed(per_video)


PredictorFn = Callable[[VideoRecord, list[Segment]], PredictionSet]


def evaluate_map(
    videos: Sequence[VideoRecord],
    predict_fn: PredictorFn,
    splits: MapSplits,
    verb_count: int,
    ratios: Sequence[int] = OBSERVED_RATIOS,
) -> MapReport:
    """Verb mAP over observation ratios using a pluggable predictor."""
    per_ratio = {}
    for ratio in ratios:
        rows = []
        for video in sorted(videos, key=lambda v: v.video_id):
            observed, remaining = observed_prefix_by_ratio(video, ratio)
            preds = predict_fn(video, observed)
            rows.append((verb_scores(preds, verb_count), remaining))
        per_ratio[ratio] = rows
    return map_report(per_ratio, splits)


def ratio_view(video: VideoRecord, observed: list[Segment]) -> VideoRecord:
    """The video as it would look with only ``observed`` seen so far."""
    return VideoRecord(
        video_id=video.video_id,
        segments=video.segments,
        observed_count=len(observed),
    )


def baseline_predictor(
    kind: str,
    state: PipelineState,
    backend: Backend | None,
    z: int | None = None,
    k: int | None = None,
) -> PredictorFn:
    """A PredictorFn for one of the reference strategies.

    The retrieve strategy embeds the observed actions via the backend and
    copies the futures of the nearest exemplars.
    """
    cfg = state.cfg
    z = cfg.z if z is None else z
    k = cfg.k if k is None else k

    def run(video: VideoRecord, observed: list[Segment]) -> PredictionSet:
        past = past_actions_of(observed, video.video_id)
        if kind == "last":
            return predict_last(video.video_id, past, z, k)
        if kind == "repeat":
            return predict_repeat(video.video_id, past, z, k)
        if kind == "retrieve":
            if state.store is None:
                raise ConfigError("retrieve baseline needs an embeddings file")
            if backend is None:
                raise ConfigError("retrieve baseline needs a backend")
            record = query_record(video, past, None)
            text = exemplar_embed_text(record, state.tax, cfg.prompt)
            (response,) = backend.dispatch([EmbedRequest(text=text)])
            return predict_retrieve(
                video.video_id,
                embedding_of(response),
                state.store,
                state.exemplars,
                z,
                k,
            )
        raise ConfigError(f"unknown baseline kind {kind!r}")

    return run


def llm_predictor(state: PipelineState, backend: Backend | None) -> PredictorFn:
    def run(video: VideoRecord, observed: list[Segment]) -> PredictionSet:
        return predict_video(ratio_view(video, observed), state, backend)

    return run


def splits_from_config(cfg: PipelineConfig, tax: Taxonomy) -> MapSplits:
    return MapSplits(
        all_verbs=list(range(len(tax.verbs))),
        freq_verbs=cfg.freq_verbs,
        rare_verbs=cfg.rare_verbs,
    )


def predictions_to_doc(
    predictions: dict[str, PredictionSet], config_raw: dict
) -> dict:
    return {
        "config": dict(config_raw),
        "videos": [
            {
                "video_id": video_id,
                "sequences": [
                    [[act.verb_id, act.noun_id] for act in seq]
                    for seq in predictions[video_id].sequences
                ],
            }
            for video_id in sorted(predictions)
        ],
    }


def predictions_from_doc(doc: dict, tax: Taxonomy) -> dict[str, PredictionSet]:
    if not isinstance(doc, dict) or not isinstance(doc.get("videos"), list):
        raise MalformedFileError("predictions document needs a videos array")
    out: dict[str, PredictionSet] = {}
    for entry in doc["videos"]:
        if not isinstance(entry, dict) or "video_id" not in entry:
            raise MalformedFileError("prediction entry lacks video_id")
        video_id = str(entry["video_id"])
        sequences = []
        for seq in entry.get("sequences", []):
            actions = []
            for pair in seq:
                if (
                    not isinstance(pair, list)
                    or len(pair) != 2
                    or not all(
                        isinstance(x, int) and not isinstance(x, bool)
                        for x in pair
                    )
                ):
                    raise MalformedFileError(
                        f"video {video_id}: malformed action {pair!r}"
                    )
                label = ActionLabel(pair[0], pair[1])
                tax.validate_label(label)
                actions.append(label)
            sequences.append(actions)
        if video_id in out:
            raise MalformedFileError(f"duplicate predictions for {video_id}")
        out[video_id] = PredictionSet(video_id, tuple(sequences))
    return out


def save_predictions(
    path: str | Path, predictions: dict[str, PredictionSet], config_raw: dict
) -> None:
    doc = predictions_to_doc(predictions, config_raw)
    Path(path).write_text(canonical_json(doc) + "\n", encoding="utf-8")


def load_predictions(path: str | Path, tax: Taxonomy) -> dict[str, PredictionSet]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFileError(f"cannot read predictions {path}: {exc}") from exc
    return predictions_from_doc(doc, tax)
