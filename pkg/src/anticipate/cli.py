"""Command-line interface.

Subcommands: ingest, recognize, exemplars, predict, eval-ed, eval-map,
baseline.  Exit codes: 0 success, 1 validation or usage error, 2 backend
or transport failure.  The backend comes from --backend, else the config
file, else the ANTICIPATE_BACKEND environment variable.  All output is
pipe-safe; diagnostics go to stderr (as JSON with --format=json).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .backend import Backend, EmbedRequest, canonical_json, embedding_of, open_backend
from .baselines import BASELINE_KINDS
from .config import PipelineConfig, load_config
from .dataset import ingest_dataset
from .errors import BackendFailure, ConfigError, ValidationError
from .metrics import (
    ed_report_doc,
    map_report_doc,
    render_ed_report,
    render_map_report,
)
from .pipeline import (
    baseline_predictor,
    evaluate_lta,
    evaluate_map,
    exemplar_embed_text,
    llm_predictor,
    load_pipeline,
    load_predictions,
    predict_all,
    recognize_past,
    save_predictions,
    splits_from_config,
)
from .retrieval import EmbeddingStore
from .taxonomy import load_taxonomy

ENV_BACKEND = "ANTICIPATE_BACKEND"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract here is 1.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="pipeline config file")
    parser.add_argument(
        "--backend",
        help="exec:<cmd> | tcp:<host:port> | mock:<fixture-file>",
    )
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--workers", type=int, help="parallel videos")
    parser.add_argument(
        "--format", choices=("text", "json"), default="text", help="output format"
    )
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config entry, e.g. --set selection.lambda=0.25",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")


def build_parser() -> _Parser:
    parser = _Parser(prog="anticipate", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)
    subs.required = True

    p = subs.add_parser("ingest", help="validate dataset and taxonomy")
    _common_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("recognize", help="recognize past actions to a file")
    _common_flags(p)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_recognize)

    p = subs.add_parser("exemplars", help="embed exemplars into a store file")
    _common_flags(p)
    p.add_argument("--out", required=True, help="embedding store file to write")
    p.set_defaults(func=cmd_exemplars)

    p = subs.add_parser("predict", help="predict future actions to a file")
    _common_flags(p)
    p.add_argument("--out", required=True, help="prediction sets file to write")
    p.add_argument(
        "--oracle-past",
        action="store_true",
        default=None,
        help="use ground-truth past actions instead of recognition",
    )
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("eval-ed", help="edit-distance report for predictions")
    _common_flags(p)
    p.add_argument("--pred", required=True, help="prediction sets file")
    p.add_argument("--gt", help="annotation file overriding the config one")
    p.add_argument("--out", help="report file (default stdout)")
    p.set_defaults(func=cmd_eval_ed)

    p = subs.add_parser("eval-map", help="verb mean-average-precision report")
    _common_flags(p)
    p.add_argument(
        "--predictor",
        choices=(*BASELINE_KINDS, "llm"),
        default="repeat",
        help="prediction strategy to score",
    )
    p.add_argument("--out", help="report file (default stdout)")
    p.set_defaults(func=cmd_eval_map)

    p = subs.add_parser("baseline", help="run a non-learned predictor")
    _common_flags(p)
    p.add_argument("--kind", choices=BASELINE_KINDS, required=True)
    p.add_argument("--out", required=True, help="prediction sets file to write")
    p.set_defaults(func=cmd_baseline)

    return parser


def _load_config(args) -> PipelineConfig:
    backend = args.backend or os.environ.get(ENV_BACKEND)
    return load_config(
        args.config,
        set_overrides=args.set,
        seed=args.seed,
        backend=backend,
        workers=args.workers,
        oracle_past=getattr(args, "oracle_past", None),
    )


def _open_backend(cfg: PipelineConfig) -> Backend:
    if not cfg.backend:
        raise ConfigError(
            "no backend configured; pass --backend or set "
            f"{ENV_BACKEND} or the config's 'backend' entry"
        )
    return open_backend(cfg.backend)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_ingest(args) -> int:
    cfg = _load_config(args)
    state = load_pipeline(cfg)
    stats = {
        "verbs": len(state.tax.verbs),
        "nouns": len(state.tax.nouns),
        "eval_videos": len(state.videos),
        "eval_segments": sum(len(v.segments) for v in state.videos),
        "exemplars": len(state.exemplars),
        "embedded": len(state.store) if state.store is not None else 0,
    }
    if args.format == "json":
        print(canonical_json(stats))
    else:
        print(" ".join(f"{k}={v}" for k, v in stats.items()))
    return 0


def cmd_recognize(args) -> int:
    cfg = _load_config(args)
    state = load_pipeline(cfg)
    with _open_backend(cfg) as backend:
        videos = []
        for video in sorted(state.videos, key=lambda v: v.video_id):
            past, _ = recognize_past(video, state, backend)
            videos.append(
                {
                    "video_id": video.video_id,
                    "past_actions": [[a.verb_id, a.noun_id] for a in past],
                }
            )
    doc = {"config": cfg.raw, "videos": videos}
    _emit(canonical_json(doc) + "\n", args.out)
    return 0


def cmd_exemplars(args) -> int:
    cfg = _load_config(args)
    tax = load_taxonomy(cfg.taxonomy_path)
    _, exemplars = ingest_dataset(
        cfg.annotations_path,
        tax,
        exemplar_past=cfg.exemplar_past,
        exemplar_future=cfg.z,
        exemplar_mode=cfg.exemplar_mode,
    )
    if not exemplars:
        raise ConfigError("no exemplars to embed; check the train split")
    ordered = sorted(exemplars, key=lambda ex: ex.exemplar_id)
    with _open_backend(cfg) as backend:
        requests = [
            EmbedRequest(text=exemplar_embed_text(ex, tax, cfg.prompt))
            for ex in ordered
        ]
        vectors = [embedding_of(r) for r in backend.dispatch(requests)]
    store = EmbeddingStore(dimension=len(vectors[0]))
    for exemplar, vector in zip(ordered, vectors):
        store.add(exemplar.exemplar_id, vector)
    store.save(args.out)
    print(f"embedded {len(ordered)} exemplars into {args.out}", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    cfg = _load_config(args)
    state = load_pipeline(cfg)
    with _open_backend(cfg) as backend:
        predictions = predict_all(state, backend)
    save_predictions(args.out, predictions, cfg.raw)
    print(f"predicted {len(predictions)} videos into {args.out}", file=sys.stderr)
    return 0


def cmd_eval_ed(args) -> int:
    cfg = _load_config(args)
    tax = load_taxonomy(cfg.taxonomy_path)
    annotations = args.gt if args.gt else cfg.annotations_path
    videos, _ = ingest_dataset(
        annotations,
        tax,
        exemplar_past=cfg.exemplar_past,
        exemplar_future=cfg.z,
        exemplar_mode=cfg.exemplar_mode,
    )
    predictions = load_predictions(args.pred, tax)
    report = evaluate_lta(videos, predictions, cfg.z, cfg.ed_variant)
    if args.format == "json":
        _emit(canonical_json(ed_report_doc(report, cfg.raw)) + "\n", args.out)
    else:
        _emit(render_ed_report(report, cfg.echo_json()), args.out)
    return 0


def cmd_eval_map(args) -> int:
    cfg = _load_config(args)
    state = load_pipeline(cfg)
    needs_backend = args.predictor in ("retrieve", "llm")
    backend = _open_backend(cfg) if needs_backend else None
    try:
        if args.predictor == "llm":
            fn = llm_predictor(state, backend)
        else:
            fn = baseline_predictor(args.predictor, state, backend)
        splits = splits_from_config(cfg, state.tax)
        report = evaluate_map(state.videos, fn, splits, len(state.tax.verbs))
    finally:
        if backend is not None:
            backend.close()
    if args.format == "json":
        _emit(canonical_json(map_report_doc(report, cfg.raw)) + "\n", args.out)
    else:
        _emit(render_map_report(report, cfg.echo_json()), args.out)
    return 0


def cmd_baseline(args) -> int:
    cfg = _load_config(args)
    state = load_pipeline(cfg)
    needs_backend = args.kind == "retrieve"
    backend = _open_backend(cfg) if needs_backend else None
    try:
        fn = baseline_predictor(args.kind, state, backend)
        predictions = {}
        for video in sorted(state.videos, key=lambda v: v.video_id):
            predictions[video.video_id] = fn(video, video.observed())
    finally:
        if backend is not None:
            backend.close()
    save_predictions(args.out, predictions, cfg.raw)
    print(
        f"{args.kind} baseline predicted {len(predictions)} videos into "
        f"{args.out}",
        file=sys.stderr,
    )
    return 0


def _diagnose(exc: Exception, fmt: str) -> None:
    if fmt == "json":
        doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(canonical_json(doc), file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ValidationError as exc:
        _diagnose(exc, args.format)
        return 1
    except BackendFailure as exc:
        _diagnose(exc, args.format)
        return 2
    except json.JSONDecodeError as exc:
        _diagnose(exc, args.format)
        return 1


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
