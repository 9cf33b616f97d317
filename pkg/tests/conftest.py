import numpy as np
import pytest

from ratedrivers.corpus import BowDocument, Vocabulary
from ratedrivers.lda import train_lda


def make_planted_corpus():
    """80 two-word documents split over disjoint vocabularies {A,B} and {C,D}."""
    vocab = Vocabulary(["A", "B", "C", "D"], [40, 40, 40, 40])
    docs = []
    for i in range(40):
        docs.append(BowDocument(f"ab{i:03d}", 0, {0: 3, 1: 2}))
        docs.append(BowDocument(f"cd{i:03d}", 0, {2: 3, 3: 2}))
    return docs, vocab


@pytest.fixture(scope="session")
def planted():
    docs, vocab = make_planted_corpus()
    model = train_lda(docs, vocab, K=2, alpha=0.1, eta=0.01, iterations=200, seed=3)
    return docs, vocab, model


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
