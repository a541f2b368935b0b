"""Deterministic scripted backend and dataset builders for tests.

The backend answers every request kind from a per-video action plan:
recognition returns one-hot distributions, captions describe the segment
they were asked about, embeddings hash the text into a fixed unit
vector, and completions continue the query's past actions along the
plan.  Everything is a pure function of the inputs, so recorded traffic
replays byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Mapping, Sequence

from anticipate.backend import (
    AnyRequest,
    Backend,
    BackendResponse,
    CaptionRequest,
    CompleteRequest,
    EmbedRequest,
    RecognizeRequest,
    error_response,
    frame_request,
)
from anticipate.dataset import ingest_dataset
from anticipate.prompting import PAST_LABEL, PromptOptions
from anticipate.retrieval import EmbeddingStore
from anticipate.rng import SplitMix64, fnv1a64
from anticipate.taxonomy import ActionLabel, Taxonomy, sequence_to_text

VERBS = [
    "take", "put", "cut", "mix", "wash", "open",
    "close", "pour", "turn on", "turn off", "knead", "roll",
]
NOUNS = [
    "dough", "knife", "bowl", "tomato", "onion", "pan", "tap", "oven",
    "cabinet", "plate", "flour", "water", "towel", "spoon",
    "tape measure", "board",
]

EMBED_DIM = 16


def make_taxonomy() -> Taxonomy:
    return Taxonomy(verbs=list(VERBS), nouns=list(NOUNS))


def plan_actions(video_seed: int, length: int, tax: Taxonomy) -> list[ActionLabel]:
    """A reproducible pseudo-random action sequence for one video."""
    rng = SplitMix64(video_seed)
    verbs = len(tax.verbs)
    nouns = len(tax.nouns)
    return [
        ActionLabel(
            int(rng.uniform() * verbs) % verbs,
            int(rng.uniform() * nouns) % nouns,
        )
        for _ in range(length)
    ]


def text_embedding(text: str, dim: int = EMBED_DIM) -> list[float]:
    """A deterministic unit vector derived from the text alone."""
    rng = SplitMix64(fnv1a64(text))
    vec = [rng.uniform() * 2.0 - 1.0 for _ in range(dim)]
    norm = sum(x * x for x in vec) ** 0.5
    if norm == 0.0:
        vec[0] = 1.0
        norm = 1.0
    return [x / norm for x in vec]


def one_hot(size: int, index: int) -> list[float]:
    return [1.0 if i == index else 0.0 for i in range(size)]


class SyntheticBackend(Backend):
    """Scripted answers for all four request kinds, driven by plans.

    ``plans`` maps video_id to the full ground-truth action list;
    ``observed`` maps video_id to how many leading segments the
    recognizer may be asked about.  ``fail`` may map any request to an
    error code to script failures.
    """

    def __init__(
        self,
        tax: Taxonomy,
        plans: Mapping[str, Sequence[ActionLabel]],
        observed: Mapping[str, int],
        z: int,
        dim: int = EMBED_DIM,
        complete_fn: Callable[[CompleteRequest], str] | None = None,
        fail: Callable[[AnyRequest], str | None] | None = None,
    ) -> None:
        super().__init__()
        self.tax = tax
        self.plans = {vid: list(seq) for vid, seq in plans.items()}
        self.observed = dict(observed)
        self.z = z
        self.dim = dim
        self.complete_fn = complete_fn
        self.fail = fail
        self.seen: list[AnyRequest] = []

    def dispatch(self, requests: Sequence[AnyRequest]) -> list[BackendResponse]:
        with self._lock:
            responses = []
            for request in requests:
                request_id = self._assign_id()
                frame_request(request, request_id)
                self.seen.append(request)
                code = self.fail(request) if self.fail else None
                if code is not None:
                    responses.append(
                        error_response(request_id, code, "scripted failure")
                    )
                else:
                    responses.append(
                        BackendResponse(
                            request_id, ok=True, payload=self._payload(request)
                        )
                    )
            return responses

    def _payload(self, request: AnyRequest) -> dict:
        if isinstance(request, RecognizeRequest):
            return self._recognize(request)
        if isinstance(request, CaptionRequest):
            # Segments span [2i, 2i + 2), so the midpoint names the index.
            index = int(request.timestamp_s // 2.0)
            return {"caption": f"a person handles step {index}"}
        if isinstance(request, EmbedRequest):
            return {"embedding": text_embedding(request.text, self.dim)}
        if isinstance(request, CompleteRequest):
            return {"completion": self._complete(request)}
        raise AssertionError(f"unhandled request {request!r}")

    def _recognize(self, request: RecognizeRequest) -> dict:
        plan = self.plans[request.video_id]
        visible = self.observed[request.video_id]
        pad = max(0, request.n - visible)
        verb_dists = []
        noun_dists = []
        for j in range(request.n):
            segment = max(0, request.window_start + j - pad)
            act = plan[segment]
            verb_dists.append(one_hot(len(self.tax.verbs), act.verb_id))
            noun_dists.append(one_hot(len(self.tax.nouns), act.noun_id))
        return {"verb_dists": verb_dists, "noun_dists": noun_dists}

    def query_past(self, prompt_text: str) -> list[ActionLabel]:
        """The past actions of the query block (the prompt's last one)."""
        line = [
            l for l in prompt_text.splitlines() if l.startswith(PAST_LABEL)
        ][-1]
        names = line[len(PAST_LABEL) :]
        actions = []
        for item in names.split("), ("):
            verb, _, noun = item.strip("()").partition(", ")
            actions.append(
                ActionLabel(self.tax.verbs.index(verb), self.tax.nouns.index(noun))
            )
        return actions

    def _continuation(self, past: Sequence[ActionLabel]) -> list[ActionLabel]:
        for plan in self.plans.values():
            if plan[: len(past)] == list(past):
                future = plan[len(past) : len(past) + self.z]
                if future:
                    return future
        return [past[-1]] * self.z

    def _complete(self, request: CompleteRequest) -> str:
        if self.complete_fn is not None:
            return self.complete_fn(request)
        past = self.query_past(request.prompt_text)
        return sequence_to_text(self._continuation(past), self.tax) + "."


def label_name(tax: Taxonomy, act: ActionLabel) -> tuple[str, str]:
    return tax.verbs[act.verb_id], tax.nouns[act.noun_id]


def video_doc(
    tax: Taxonomy,
    video_id: str,
    actions: Sequence[ActionLabel],
    observed_count: int,
    with_narrations: bool = False,
) -> dict:
    segments = []
    for i, act in enumerate(actions):
        verb, noun = label_name(tax, act)
        seg = {
            "start_s": 2.0 * i,
            "end_s": 2.0 * i + 2.0,
            "verb": verb,
            "noun": noun,
        }
        if with_narrations:
            seg["narration"] = f"a person does {verb} with {noun}"
        segments.append(seg)
    return {
        "video_id": video_id,
        "observed_count": observed_count,
        "segments": segments,
    }


def build_workspace(
    root: Path,
    z: int = 4,
    k: int = 2,
    m: int = 2,
    eval_videos: int = 3,
    train_videos: int = 4,
    observed_count: int = 6,
    exemplar_past: int = 4,
    config_extra: dict | None = None,
) -> tuple[Path, SyntheticBackend]:
    """Write taxonomy, annotations, embeddings, and config under ``root``.

    Returns the config path and a scripted backend consistent with the
    generated data.  Train videos are long enough for several sliding
    exemplar windows each; every eval video has ``z`` labeled segments
    beyond its observed prefix.
    """
    root.mkdir(parents=True, exist_ok=True)
    tax = make_taxonomy()

    (root / "taxonomy.json").write_text(
        json.dumps({"verbs": VERBS, "nouns": NOUNS}, indent=1) + "\n",
        encoding="utf-8",
    )

    plans: dict[str, list[ActionLabel]] = {}
    observed: dict[str, int] = {}
    eval_docs = []
    for i in range(eval_videos):
        video_id = f"val{i:02d}"
        plan = plan_actions(1000 + i, observed_count + z, tax)
        # Distinct first actions keep past-prefix matching unambiguous.
        plan[0] = ActionLabel(i % len(tax.verbs), (3 * i) % len(tax.nouns))
        plans[video_id] = plan
        observed[video_id] = observed_count
        eval_docs.append(video_doc(tax, video_id, plan, observed_count))

    span = exemplar_past + z
    train_docs = []
    for i in range(train_videos):
        video_id = f"train{i:02d}"
        length = span * 2 + exemplar_past
        plan = plan_actions(2000 + i, length, tax)
        plan[0] = ActionLabel(
            (5 + i) % len(tax.verbs), (7 + 2 * i) % len(tax.nouns)
        )
        plans[video_id] = plan
        train_docs.append(
            video_doc(tax, video_id, plan, 1, with_narrations=True)
        )

    annotations = [
        {"split": "train", "videos": train_docs},
        {"split": "val", "videos": eval_docs},
    ]
    (root / "data.json").write_text(
        json.dumps(annotations, indent=1) + "\n", encoding="utf-8"
    )

    config = {
        "z": z,
        "k": k,
        "seed": 7,
        "taxonomy": "taxonomy.json",
        "annotations": "data.json",
        "embeddings": "embeddings.txt",
        "recognition": {"n": 4, "k_samples": 5},
        "selection": {"kind": "mmr", "lambda": 0.5, "m": m},
        "exemplar": {"past_length": exemplar_past, "mode": "sliding"},
    }
    if config_extra:
        config.update(config_extra)
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=1) + "\n", encoding="utf-8")

    tax_loaded = tax
    _, exemplars = ingest_dataset(
        root / "data.json",
        tax_loaded,
        exemplar_past=exemplar_past,
        exemplar_future=z,
        exemplar_mode="sliding",
    )
    options = PromptOptions(
        include_captions=config.get("prompt", {}).get("include_captions", True)
    )
    store = EmbeddingStore(EMBED_DIM)
    from anticipate.pipeline import exemplar_embed_text

    for record in exemplars:
        text = exemplar_embed_text(record, tax_loaded, options)
        store.add(record.exemplar_id, text_embedding(text))
    store.save(root / "embeddings.txt")

    backend = SyntheticBackend(tax, plans, observed, z)
    return config_path, backend
