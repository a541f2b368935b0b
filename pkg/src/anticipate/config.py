"""Pipeline configuration: one JSON file plus command-line overrides.

Relative paths inside the file (taxonomy, annotations, embeddings, and
the fixture of a "mock:" backend) resolve against the file's directory.
The post-override document is kept verbatim and echoed into every report
so results carry their provenance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .backend import canonical_json
from .captioning import DEFAULT_PREFIX, DEFAULT_QUESTIONS, CaptionMode
from .errors import ConfigError
from .prompting import DEFAULT_INSTRUCTION, PromptOptions
from .recognition import RecognitionConfig
from .retrieval import SELECTION_KINDS

EXEMPLAR_MODES = ("sliding", "single")
ED_VARIANTS = ("osa", "dl")


@dataclass(frozen=True)
class SelectionPolicy:
    kind: str = "mmr"
    lam: float = 0.5
    m: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in SELECTION_KINDS:
            raise ConfigError(
                f"selection kind must be one of {SELECTION_KINDS}, "
                f"got {self.kind!r}"
            )
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"selection lambda must be in [0, 1], got {self.lam}")
        if self.m < 1:
            raise ConfigError(f"exemplars per prompt must be >= 1, got {self.m}")


@dataclass
class PipelineConfig:
    z: int
    k: int
    seed: int
    taxonomy_path: Path
    annotations_path: Path
    embeddings_path: Path | None
    recognition: RecognitionConfig
    selection: SelectionPolicy
    prompt: PromptOptions
    caption_mode: CaptionMode
    prefix_text: str
    questions: dict[str, str]
    oracle_past: bool
    exemplar_past: int
    exemplar_mode: str
    backend: str | None
    workers: int
    ed_variant: str
    freq_verbs: list[int] | None
    rare_verbs: list[int] | None
    raw: dict

    def echo_json(self) -> str:
        """Canonical serialization of the effective config document."""
        return canonical_json(self.raw)


def _typed(doc: dict, key: str, types, default, where: str):
    if key not in doc:
        return default
    value = doc[key]
    if types is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}.{key} must be a boolean")
        return value
    if isinstance(value, bool) or not isinstance(value, types):
        raise ConfigError(
            f"{where}.{key} has type {type(value).__name__}"
        )
    return value


def _parse_override_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply "dotted.key=value" overrides; values parse as JSON or stay strings."""
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} must look like key=value")
        target = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} crosses non-object {part!r}")
            target = node
        target[parts[-1]] = _parse_override_value(value)
    return doc


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def _resolve_backend(base: Path, spec: str | None) -> str | None:
    if spec is None:
        return None
    scheme, sep, rest = spec.partition(":")
    if sep and scheme == "mock":
        return f"mock:{_resolve(base, rest)}"
    return spec


def load_config(
    path: str | Path,
    set_overrides: list[str] | None = None,
    seed: int | None = None,
    backend: str | None = None,
    workers: int | None = None,
    oracle_past: bool | None = None,
) -> PipelineConfig:
    """Read, override, validate, and resolve a pipeline config file."""
    config_path = Path(path)
    try:
        doc = json.loads(config_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    if set_overrides:
        apply_overrides(doc, set_overrides)
    if seed is not None:
        doc["seed"] = seed
    if workers is not None:
        doc["workers"] = workers
    backend_from_flag = backend is not None
    if backend_from_flag:
        doc["backend"] = backend
    if oracle_past is not None:
        doc["oracle_past"] = oracle_past

    where = "config"
    z = _typed(doc, "z", int, 20, where)
    k = _typed(doc, "k", int, 5, where)
    top_seed = _typed(doc, "seed", int, 0, where)
    if z < 1:
        raise ConfigError(f"z must be >= 1, got {z}")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")

    for required in ("taxonomy", "annotations"):
        if required not in doc or not isinstance(doc[required], str):
            raise ConfigError(f"config needs a {required!r} path")
    base = config_path.resolve().parent
    taxonomy_path = _resolve(base, doc["taxonomy"])
    annotations_path = _resolve(base, doc["annotations"])
    embeddings_value = _typed(doc, "embeddings", str, None, where)
    embeddings_path = (
        _resolve(base, embeddings_value) if embeddings_value else None
    )

    rec_doc = _typed(doc, "recognition", dict, {}, where)
    try:
        recognition = RecognitionConfig(
            n=_typed(rec_doc, "n", int, 4, "recognition"),
            stride=_typed(rec_doc, "stride", int, 1, "recognition"),
            k_samples=_typed(rec_doc, "k_samples", int, 5, "recognition"),
            seed=_typed(rec_doc, "seed", int, top_seed, "recognition"),
        )
    except Exception as exc:
        raise ConfigError(f"recognition config: {exc}") from exc

    sel_doc = _typed(doc, "selection", dict, {}, where)
    selection = SelectionPolicy(
        kind=_typed(sel_doc, "kind", str, "mmr", "selection"),
        lam=float(_typed(sel_doc, "lambda", (int, float), 0.5, "selection")),
        m=_typed(sel_doc, "m", int, 4, "selection"),
        seed=_typed(sel_doc, "seed", int, top_seed, "selection"),
    )

    prompt_doc = _typed(doc, "prompt", dict, {}, where)
    try:
        prompt = PromptOptions(
            include_captions=_typed(
                prompt_doc, "include_captions", bool, True, "prompt"
            ),
            include_noun_list=_typed(
                prompt_doc, "include_noun_list", bool, False, "prompt"
            ),
            instruction_text=_typed(
                prompt_doc, "instruction", str, DEFAULT_INSTRUCTION, "prompt"
            ),
            max_output_tokens=_typed(
                prompt_doc, "max_output_tokens", int, 80, "prompt"
            ),
        )
    except Exception as exc:
        raise ConfigError(f"prompt config: {exc}") from exc

    try:
        caption_mode = CaptionMode.parse(
            _typed(doc, "caption_mode", str, "prefix", where)
        )
    except Exception as exc:
        raise ConfigError(f"caption_mode: {exc}") from exc
    prefix_text = _typed(doc, "prefix_text", str, DEFAULT_PREFIX, where)
    questions_doc = _typed(doc, "questions", dict, {}, where)
    questions = dict(DEFAULT_QUESTIONS)
    for concept, text in questions_doc.items():
        if concept not in DEFAULT_QUESTIONS or not isinstance(text, str):
            raise ConfigError(f"questions.{concept} is not a known concept")
        questions[concept] = text

    exemplar_doc = _typed(doc, "exemplar", dict, {}, where)
    exemplar_past = _typed(exemplar_doc, "past_length", int, 8, "exemplar")
    exemplar_mode = _typed(exemplar_doc, "mode", str, "sliding", "exemplar")
    if exemplar_past < 1:
        raise ConfigError(f"exemplar past length must be >= 1, got {exemplar_past}")
    if exemplar_mode not in EXEMPLAR_MODES:
        raise ConfigError(
            f"exemplar mode must be one of {EXEMPLAR_MODES}, got {exemplar_mode!r}"
        )

    eval_doc = _typed(doc, "eval", dict, {}, where)
    ed_variant = _typed(eval_doc, "variant", str, "osa", "eval")
    if ed_variant not in ED_VARIANTS:
        raise ConfigError(
            f"edit-distance variant must be one of {ED_VARIANTS}, "
            f"got {ed_variant!r}"
        )
    freq_verbs = _typed(eval_doc, "freq_verbs", list, None, "eval")
    rare_verbs = _typed(eval_doc, "rare_verbs", list, None, "eval")
    for name, ids in (("freq_verbs", freq_verbs), ("rare_verbs", rare_verbs)):
        if ids is not None and not all(
            isinstance(i, int) and not isinstance(i, bool) for i in ids
        ):
            raise ConfigError(f"eval.{name} must be a list of verb ids")

    workers_value = _typed(doc, "workers", int, 1, where)
    if workers_value < 1:
        raise ConfigError(f"workers must be >= 1, got {workers_value}")

    # Command-line backends resolve against the working directory, the
    # config file's own backend against its directory.
    backend_base = Path.cwd() if backend_from_flag else base

    return PipelineConfig(
        z=z,
        k=k,
        seed=top_seed,
        taxonomy_path=taxonomy_path,
        annotations_path=annotations_path,
        embeddings_path=embeddings_path,
        recognition=recognition,
        selection=selection,
        prompt=prompt,
        caption_mode=caption_mode,
        prefix_text=prefix_text,
        questions=questions,
        oracle_past=_typed(doc, "oracle_past", bool, False, where),
        exemplar_past=exemplar_past,
        exemplar_mode=exemplar_mode,
        backend=_resolve_backend(
            backend_base, _typed(doc, "backend", str, None, where)
        ),
        workers=workers_value,
        ed_variant=ed_variant,
        freq_verbs=freq_verbs,
        rare_verbs=rare_verbs,
        raw=doc,
    )
