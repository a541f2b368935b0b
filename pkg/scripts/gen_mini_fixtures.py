"""Regenerate the committed fixtures under fixtures/.

Usage, from the repository root:

    python scripts/gen_mini_fixtures.py

Produces fixtures/mini (a self-contained workspace: taxonomy, dataset,
embedding store, config, recorded backend fixture, golden outputs) and
fixtures/protocol/conformance.json (wire-protocol samples of every
request kind plus a scripted error).  Everything here is deterministic;
rerunning the script must leave the tree byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from anticipate.backend import EmbedRequest, RecordingBackend  # noqa: E402
from anticipate.cli import run  # noqa: E402
from anticipate.config import load_config  # noqa: E402
from anticipate.dataset import observed_prefix_by_ratio, past_actions_of  # noqa: E402
from anticipate.pipeline import (  # noqa: E402
    evaluate_map,
    exemplar_embed_text,
    llm_predictor,
    load_pipeline,
    predict_all,
    query_record,
    splits_from_config,
)

from synthetic import build_workspace  # noqa: E402


def record_backend_fixture(config_path: Path, backend) -> None:
    """Capture every request the commands will replay from the fixture."""
    recorder = RecordingBackend(backend)
    cfg = load_config(config_path)
    state = load_pipeline(cfg)

    predict_all(state, recorder)
    splits = splits_from_config(cfg, state.tax)
    evaluate_map(
        state.videos, llm_predictor(state, recorder), splits, len(state.tax.verbs)
    )
    recorder.dispatch(
        [
            EmbedRequest(
                text=exemplar_embed_text(state.exemplars[eid], state.tax, cfg.prompt)
            )
            for eid in sorted(state.exemplars)
        ]
    )
    for video in state.videos:
        views = [video.observed()]
        views.extend(
            observed_prefix_by_ratio(video, ratio)[0] for ratio in (25, 50, 75)
        )
        for observed in views:
            past = past_actions_of(observed, video.video_id)
            record = query_record(video, past, None)
            recorder.dispatch(
                [EmbedRequest(text=exemplar_embed_text(record, state.tax, cfg.prompt))]
            )
    recorder.save(config_path.parent / "backend_fixture.json")


def generate_mini(root: Path) -> None:
    if root.exists():
        shutil.rmtree(root)
    config_path, backend = build_workspace(
        root,
        z=4,
        k=2,
        m=2,
        eval_videos=3,
        train_videos=8,
        observed_count=8,
        exemplar_past=4,
        config_extra={"backend": "mock:backend_fixture.json"},
    )
    record_backend_fixture(config_path, backend)

    # Golden outputs come from the real commands replaying the fixture.
    code = run(
        [
            "predict",
            "--config",
            str(config_path),
            "--out",
            str(root / "golden_predictions.json"),
        ]
    )
    assert code == 0, "predict failed while generating goldens"
    code = run(
        [
            "eval-ed",
            "--config",
            str(config_path),
            "--pred",
            str(root / "golden_predictions.json"),
            "--out",
            str(root / "golden_ed_report.txt"),
        ]
    )
    assert code == 0, "eval-ed failed while generating goldens"
    code = run(
        [
            "eval-map",
            "--config",
            str(config_path),
            "--predictor",
            "llm",
            "--out",
            str(root / "golden_map_report.txt"),
        ]
    )
    assert code == 0, "eval-map failed while generating goldens"


def conformance_entries() -> list[dict]:
    """Wire-protocol samples: every kind, unicode text, and an error."""
    prompt = (
        "Predict the next 2 actions in order.\n\n"
        "Past actions: take dough, roll dough\n"
        "Future actions: put dough, open oven\n\n"
        "Past actions: take knife\n"
        "Future actions:"
    )
    digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
    embedding = [0.1, -0.25, 1e-05, 123456.789] + [0.0] * 12
    return [
        {
            "request": {
                "kind": "recognize",
                "n": 2,
                "video_id": "conf01",
                "window_start": 0,
            },
            "response": {
                "verb_dists": [[0.5, 0.25, 0.25], [1.0, 0.0, 0.0]],
                "noun_dists": [[0.25, 0.25, 0.25, 0.25], [0.0, 0.0, 1.0, 0.0]],
            },
        },
        {
            "request": {
                "kind": "caption",
                "conditional_text": "A person is",
                "timestamp_s": 3.5,
                "video_id": "conf01",
            },
            "response": {"caption": "a person slices a tomato"},
        },
        {
            "request": {
                "kind": "caption",
                "conditional_text": (
                    "Question: what is the person doing? Answer:"
                ),
                "timestamp_s": 7.5,
                "video_id": "conf02",
            },
            "response": {"caption": "a person pours café au lait"},
        },
        {
            "request": {
                "kind": "embed",
                "text": "Past actions: take dough, roll dough\nFuture actions:",
            },
            "response": {"embedding": embedding},
        },
        {
            "request": {
                "kind": "complete",
                "max_output_tokens": 64,
                "prompt_text": prompt,
                "sampling_seed": 7,
            },
            "response": {"completion": "put dough, open oven."},
        },
        {
            "request": {
                "kind": "complete",
                "max_output_tokens": 64,
                "prompt_sha256": digest,
                "sampling_seed": 8,
            },
            "response": {"completion": "put dough, close oven."},
        },
        {
            "request": {
                "kind": "caption",
                "conditional_text": "A person is",
                "timestamp_s": 9.5,
                "video_id": "conf03",
            },
            "response": {
                "error": {
                    "code": "BACKEND_ERROR",
                    "message": "scripted failure for error-path tests",
                }
            },
        },
    ]


def generate_protocol(root: Path) -> None:
    if root.exists():
        shutil.rmtree(root)
    root.mkdir(parents=True)
    text = json.dumps(
        conformance_entries(), indent=2, sort_keys=True, ensure_ascii=False
    )
    (root / "conformance.json").write_text(text + "\n", encoding="utf-8")


def main() -> int:
    generate_mini(REPO / "fixtures" / "mini")
    generate_protocol(REPO / "fixtures" / "protocol")
    for path in sorted((REPO / "fixtures").rglob("*")):
        if path.is_file():
            print(f"wrote {path.relative_to(REPO)} ({path.stat().st_size} bytes)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
