"""Shared fixtures: adapter configs and paths to the repo-level fixtures."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from anticipate_adapter.config import load_adapter_config

REPO = Path(__file__).resolve().parents[2]
MINI = REPO / "fixtures" / "mini"
CONFORMANCE = REPO / "fixtures" / "protocol" / "conformance.json"


def toy_config_dict(recognizer: bool = True) -> dict:
    raw = {
        "captioner": {"id": "toy-captioner"},
        "embedder": {"id": "toy-embedder", "dimension": 16, "unit_norm": True},
        "llm": {"id": "toy-lm", "temperature": 1.0},
        "device": "cpu",
        "max_batch": 1,
    }
    if recognizer:
        raw["recognizer"] = {
            "id": "toy-recognizer",
            "verb_count": 12,
            "noun_count": 16,
        }
    return raw


@pytest.fixture
def toy_config(tmp_path):
    path = tmp_path / "adapter.json"
    path.write_text(json.dumps(toy_config_dict()), encoding="utf-8")
    return load_adapter_config(path)


def write_config(path: Path, raw: dict) -> Path:
    path.write_text(json.dumps(raw), encoding="utf-8")
    return path
