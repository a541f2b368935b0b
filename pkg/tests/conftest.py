"""Shared fixtures: a small taxonomy and paths to the bundled data."""

from __future__ import annotations

from pathlib import Path

import pytest

from anticipate.taxonomy import ActionLabel, Taxonomy

from synthetic import NOUNS, VERBS

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def tax() -> Taxonomy:
    return Taxonomy(verbs=list(VERBS), nouns=list(NOUNS))


@pytest.fixture
def fallback() -> ActionLabel:
    return ActionLabel(VERBS.index("knead"), NOUNS.index("dough"))


def label(tax: Taxonomy, verb: str, noun: str) -> ActionLabel:
    return ActionLabel(tax.verbs.index(verb), tax.nouns.index(noun))


@pytest.fixture(scope="session")
def mini_dir() -> Path:
    return FIXTURES / "mini"


@pytest.fixture(scope="session")
def protocol_fixture() -> Path:
    return FIXTURES / "protocol" / "conformance.json"
