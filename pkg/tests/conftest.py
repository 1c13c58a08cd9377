import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ausk.elaborate import corpus_path, load  # noqa: E402


@pytest.fixture(scope="session")
def basic():
    return load(corpus_path("basic.ausk"))


@pytest.fixture(scope="session")
def grd():
    return load(corpus_path("grd.ausk"))


@pytest.fixture(scope="session")
def counter():
    return load(corpus_path("counterexamples.ausk"))


@pytest.fixture(scope="session")
def lists():
    return load(corpus_path("lists.ausk"))
