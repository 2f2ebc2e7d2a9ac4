from __future__ import annotations

import pytest

from helpers import BANK_IDS, matrix_for, small_corpus


@pytest.fixture()
def corpus():
    return small_corpus()


@pytest.fixture()
def matrix(corpus):
    return matrix_for(corpus, BANK_IDS, seed=0, gold_boost=3.0)
