from __future__ import annotations

import pytest

from editjudge import (
    KeywordClassifier,
    OverlapMatcher,
    SentenceSegmenter,
    load_taxonomy,
)


@pytest.fixture(scope="session")
def taxonomy():
    return load_taxonomy("default")


@pytest.fixture()
def segmenter():
    return SentenceSegmenter()


@pytest.fixture()
def matcher(segmenter):
    return OverlapMatcher(segmenter=segmenter)


@pytest.fixture()
def classifier():
    return KeywordClassifier()
