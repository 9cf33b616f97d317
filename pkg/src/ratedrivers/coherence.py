"""Topic-quality scoring: sliding-window NPMI coherence (primary) and document
co-occurrence log-ratio coherence (secondary cross-check)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .corpus import BowDocument
from .lda import LdaModel, top_words

DEFAULT_TOP_N = 10
DEFAULT_WINDOW = 110
DEFAULT_EPSILON = 1e-12


class CoherenceError(ValueError):
    pass


@dataclass
class CoherenceReport:
    metric: str  # "cv" | "umass"
    per_topic: list[float]
    top_n: int
    window: int | None = None

    @property
    def aggregate(self) -> float:
        return aggregate_coherence(self.per_topic)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["topic_id", "metric", "score"])
            for k, score in enumerate(self.per_topic):
                writer.writerow([k, self.metric, f"{score:.6f}"])
            writer.writerow(["mean", self.metric, f"{self.aggregate:.6f}"])


def aggregate_coherence(per_topic) -> float:
    """Arithmetic mean of per-topic scores."""
    scores = list(per_topic)
    if not scores:
        raise CoherenceError("cannot aggregate an empty score list")
    return float(np.mean(scores))


class WindowStats:
    """Boolean sliding-window occurrence counts for a tracked set of words.

    A token list shorter than the window contributes one window (the whole
    list); longer lists contribute one window per start position.
    """

    def __init__(self, sentences, window: int, tracked: set[str]):
        if window < 2:
            raise CoherenceError(f"window must be >= 2, got {window}")
        self.window = window
        self.n_windows = 0
        self.counts: dict[str, int] = {w: 0 for w in tracked}
        self.pair_counts: dict[frozenset, int] = {}
        tracked = set(tracked)
        for tokens in sentences:
            length = len(tokens)
            if length == 0:
                continue
            if length <= window:
                spans = [tokens]
            else:
                spans = [tokens[i : i + window] for i in range(length - window + 1)]
            for span in spans:
                self.n_windows += 1
                present = tracked.intersection(span)
                for w in present:
                    self.counts[w] += 1
                for a, b in combinations(sorted(present), 2):
                    pair = frozenset((a, b))
                    self.pair_counts[pair] = self.pair_counts.get(pair, 0) + 1

    def prob(self, word: str) -> float:
        return self.counts[word] / self.n_windows

    def joint_prob(self, a: str, b: str) -> float:
        if a == b:
            return self.prob(a)
        return self.pair_counts.get(frozenset((a, b)), 0) / self.n_windows


def _npmi(p_a: float, p_b: float, p_ab: float, epsilon: float) -> float:
    if p_a <= 0.0 or p_b <= 0.0:
        raise CoherenceError("word never occurs in any window")
    denom = -math.log(p_ab + epsilon)
    if denom <= 0.0:
        return 1.0  # joint probability at (or beyond) one: perfect association
    return math.log((p_ab + epsilon) / (p_a * p_b)) / denom


def _check_top_words(words) -> None:
    if len(set(words)) != len(words):
        raise CoherenceError("top words must be distinct")
    if len(words) < 2:
        raise CoherenceError("need at least two top words to score a topic")


def cv_from_stats(words: list[str], stats: WindowStats, epsilon: float = DEFAULT_EPSILON) -> float:
    """Sliding-window NPMI coherence of a word set over precomputed window counts.

    Each word is represented by its NPMI vector against the whole set; the
    score is the mean cosine similarity between each word's vector and the
    set's summed vector.
    """
    _check_top_words(words)
    if stats.n_windows == 0:
        raise CoherenceError("corpus produced zero windows")
    n = len(words)
    vectors = np.empty((n, n))
    for i, a in enumerate(words):
        for j, b in enumerate(words):
            vectors[i, j] = _npmi(stats.prob(a), stats.prob(b), stats.joint_prob(a, b), epsilon)
    summed = vectors.sum(axis=0)
    s_norm = float(np.linalg.norm(summed))
    sims = []
    for i in range(n):
        v_norm = float(np.linalg.norm(vectors[i]))
        if v_norm == 0.0 or s_norm == 0.0:
            sims.append(0.0)
        else:
            sims.append(float(vectors[i] @ summed) / (v_norm * s_norm))
    return float(np.mean(sims))


def cv_coherence(
    model: LdaModel,
    topic: int,
    sentences,
    top_n: int = DEFAULT_TOP_N,
    window: int = DEFAULT_WINDOW,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Sliding-window NPMI coherence of one topic's top words over token lists."""
    if top_n < 2:
        raise CoherenceError(f"top_n must be >= 2, got {top_n}")
    words = [w for w, _ in top_words(model, topic, top_n)]
    _check_top_words(words)
    stats = WindowStats(sentences, window, set(words))
    return cv_from_stats(words, stats, epsilon)


def cv_report(
    model: LdaModel,
    sentences,
    top_n: int = DEFAULT_TOP_N,
    window: int = DEFAULT_WINDOW,
    epsilon: float = DEFAULT_EPSILON,
) -> CoherenceReport:
    """Score every topic with a single corpus scan."""
    sentences = list(sentences)
    topic_words = [[w for w, _ in top_words(model, k, top_n)] for k in range(model.K)]
    tracked = {w for words in topic_words for w in words}
    stats = WindowStats(sentences, window, tracked)
    scores = [cv_from_stats(words, stats, epsilon) for words in topic_words]
    return CoherenceReport(metric="cv", per_topic=scores, top_n=top_n, window=window)


class DocStats:
    """Document frequency and co-document frequency over bag-of-words documents."""

    def __init__(self, corpus: list[BowDocument], tracked: set[int]):
        self.counts: dict[int, int] = {v: 0 for v in tracked}
        self.pair_counts: dict[frozenset, int] = {}
        for doc in corpus:
            present = tracked.intersection(doc.counts)
            for v in present:
                self.counts[v] += 1
            for a, b in combinations(sorted(present), 2):
                pair = frozenset((a, b))
                self.pair_counts[pair] = self.pair_counts.get(pair, 0) + 1

    def doc_freq(self, v: int) -> int:
        return self.counts[v]

    def co_doc_freq(self, a: int, b: int) -> int:
        return self.pair_counts.get(frozenset((a, b)), 0)


def umass_from_stats(word_ids: list[int], stats: DocStats) -> float:
    """Rank-ordered log co-occurrence score: pairs (i, j) with i before j
    contribute log((D(w_i, w_j) + 1) / D(w_j))."""
    _check_top_words(word_ids)
    total = 0.0
    for i in range(len(word_ids)):
        for j in range(i + 1, len(word_ids)):
            d_j = stats.doc_freq(word_ids[j])
            if d_j == 0:
                raise CoherenceError(
                    f"top word id {word_ids[j]} never occurs in the corpus"
                )
            total += math.log((stats.co_doc_freq(word_ids[i], word_ids[j]) + 1) / d_j)
    return total


def umass_coherence(
    model: LdaModel,
    topic: int,
    corpus: list[BowDocument],
    top_n: int = DEFAULT_TOP_N,
) -> float:
    """Document co-occurrence coherence of one topic's ranked top words."""
    if top_n < 2:
        raise CoherenceError(f"top_n must be >= 2, got {top_n}")
    words = [w for w, _ in top_words(model, topic, top_n)]
    _check_top_words(words)
    ids = [model.vocab.id_of(w) for w in words]
    stats = DocStats(corpus, set(ids))
    return umass_from_stats(ids, stats)


def umass_report(
    model: LdaModel,
    corpus: list[BowDocument],
    top_n: int = DEFAULT_TOP_N,
) -> CoherenceReport:
    topic_ids = [
        [model.vocab.id_of(w) for w, _ in top_words(model, k, top_n)]
        for k in range(model.K)
    ]
    tracked = {v for ids in topic_ids for v in ids}
    stats = DocStats(corpus, tracked)
    scores = [umass_from_stats(ids, stats) for ids in topic_ids]
    return CoherenceReport(metric="umass", per_topic=scores, top_n=top_n, window=None)
