from __future__ import annotations

from pathlib import Path

import pytest

from claudette.corpus import load_corpus

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def mini_dir() -> Path:
    return FIXTURES / "mini"


@pytest.fixture(scope="session")
def planted_dir() -> Path:
    return FIXTURES / "planted"


@pytest.fixture(scope="session")
def adjacency_dir() -> Path:
    return FIXTURES / "adjacency"


@pytest.fixture(scope="session")
def mini_corpus():
    return load_corpus(FIXTURES / "mini")


@pytest.fixture(scope="session")
def planted_corpus():
    return load_corpus(FIXTURES / "planted")


@pytest.fixture(scope="session")
def adjacency_corpus():
    return load_corpus(FIXTURES / "adjacency")
