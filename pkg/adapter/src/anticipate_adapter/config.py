"""Adapter configuration: which model serves each request kind.

The config file is a JSON object:

    {
      "captioner": {"id": "toy-captioner"},
      "embedder": {"id": "toy-embedder", "dimension": 16, "unit_norm": true},
      "llm": {"id": "toy-lm", "temperature": 1.0},
      "recognizer": {"id": "toy-recognizer", "verb_count": 12, "noun_count": 16},
      "device": "cpu",
      "max_batch": 1
    }

``recognizer`` is optional; recognize requests fail with MODEL_LOAD when
it is absent. Extra keys inside a model spec are passed to the model
constructor, so each model documents its own options.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class AdapterConfigError(Exception):
    """Raised when the config file is missing, unreadable, or invalid."""


@dataclass
class AdapterConfig:
    captioner: dict
    embedder: dict
    llm: dict
    recognizer: dict | None
    device: str
    max_batch: int


def _model_spec(raw: dict, name: str, required: bool) -> dict | None:
    spec = raw.get(name)
    if spec is None:
        if required:
            raise AdapterConfigError(f"config needs a {name!r} model spec")
        return None
    if not isinstance(spec, dict) or not isinstance(spec.get("id"), str):
        raise AdapterConfigError(f"{name!r} must be an object with an 'id' string")
    return spec


def load_adapter_config(path: Path) -> AdapterConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise AdapterConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AdapterConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise AdapterConfigError(f"config {path} must be a JSON object")

    device = raw.get("device", "cpu")
    if not isinstance(device, str):
        raise AdapterConfigError("'device' must be a string")
    max_batch = raw.get("max_batch", 1)
    if isinstance(max_batch, bool) or not isinstance(max_batch, int) or max_batch < 1:
        raise AdapterConfigError("'max_batch' must be an integer >= 1")

    return AdapterConfig(
        captioner=_model_spec(raw, "captioner", required=True),
        embedder=_model_spec(raw, "embedder", required=True),
        llm=_model_spec(raw, "llm", required=True),
        recognizer=_model_spec(raw, "recognizer", required=False),
        device=device,
        max_batch=max_batch,
    )
