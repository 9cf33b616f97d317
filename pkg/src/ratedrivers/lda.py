"""Topic modeling via collapsed Gibbs sampling with deterministic per-document RNG streams.

Every document owns a counter-based random stream keyed by (seed, sentence key),
and sweeps visit documents in canonical key order, so training is reproducible
and invariant to the order documents arrive in.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
from numba import njit

from .corpus import BowDocument, Vocabulary

MODEL_FORMAT_VERSION = 1

_U64 = np.uint64
_INV_2_53 = 1.0 / 9007199254740992.0


class LdaError(ValueError):
    pass


class NoTopicError(LdaError):
    """Raised when a document has no tokens to assign a topic to."""


@njit(inline="always", cache=True)
def _mix64(x):
    z = x + _U64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@njit(inline="always", cache=True)
def _uniform(seed, counter):
    return (_mix64(seed + counter) >> _U64(11)) * _INV_2_53


@njit(cache=True)
def _gibbs_train(doc_ptr, words, doc_seeds, K, V, alpha, eta, iterations):
    n_docs = doc_ptr.size - 1
    total = words.size
    z = np.empty(total, np.int32)
    n_dk = np.zeros((n_docs, K), np.int64)
    n_kv = np.zeros((K, V), np.int64)
    n_k = np.zeros(K, np.int64)
    counters = np.zeros(n_docs, np.uint64)
    probs = np.empty(K, np.float64)
    v_eta = V * eta

    for d in range(n_docs):
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            u = _uniform(doc_seeds[d], counters[d])
            counters[d] += _U64(1)
            k = int(u * K)
            if k >= K:
                k = K - 1
            z[i] = k
            n_dk[d, k] += 1
            n_kv[k, words[i]] += 1
            n_k[k] += 1

    for _ in range(iterations):
        for d in range(n_docs):
            for i in range(doc_ptr[d], doc_ptr[d + 1]):
                w = words[i]
                k = z[i]
                n_dk[d, k] -= 1
                n_kv[k, w] -= 1
                n_k[k] -= 1
                tot = 0.0
                for kk in range(K):
                    p = (n_dk[d, kk] + alpha) * (n_kv[kk, w] + eta) / (n_k[kk] + v_eta)
                    probs[kk] = p
                    tot += p
                u = _uniform(doc_seeds[d], counters[d]) * tot
                counters[d] += _U64(1)
                acc = 0.0
                newk = K - 1
                for kk in range(K):
                    acc += probs[kk]
                    if u < acc:
                        newk = kk
                        break
                z[i] = newk
                n_dk[d, newk] += 1
                n_kv[newk, w] += 1
                n_k[newk] += 1

    return z, n_dk, n_kv, n_k


@njit(cache=True)
def _gibbs_fold_in(doc_ptr, words, doc_seeds, n_kv, n_k, K, V, alpha, eta, iterations):
    """Resample topics per document with topic-word counts frozen; returns doc-topic counts."""
    n_docs = doc_ptr.size - 1
    n_dk = np.zeros((n_docs, K), np.int64)
    probs = np.empty(K, np.float64)
    v_eta = V * eta

    for d in range(n_docs):
        start, stop = doc_ptr[d], doc_ptr[d + 1]
        length = stop - start
        if length == 0:
            continue
        z = np.empty(length, np.int32)
        counter = _U64(0)
        for j in range(length):
            u = _uniform(doc_seeds[d], counter)
            counter += _U64(1)
            k = int(u * K)
            if k >= K:
                k = K - 1
            z[j] = k
            n_dk[d, k] += 1
        for _ in range(iterations):
            for j in range(length):
                w = words[start + j]
                k = z[j]
                n_dk[d, k] -= 1
                tot = 0.0
                for kk in range(K):
                    p = (n_dk[d, kk] + alpha) * (n_kv[kk, w] + eta) / (n_k[kk] + v_eta)
                    probs[kk] = p
                    tot += p
                u = _uniform(doc_seeds[d], counter) * tot
                counter += _U64(1)
                acc = 0.0
                newk = K - 1
                for kk in range(K):
                    acc += probs[kk]
                    if u < acc:
                        newk = kk
                        break
                z[j] = newk
                n_dk[d, newk] += 1

    return n_dk


def _doc_seed(seed: int, key: tuple[str, int]) -> int:
    payload = f"{seed}|{key[0]}|{key[1]}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def _flatten(docs: list[BowDocument], seed: int):
    doc_ptr = np.zeros(len(docs) + 1, dtype=np.int64)
    seeds = np.zeros(len(docs), dtype=np.uint64)
    chunks = []
    for d, doc in enumerate(docs):
        ids = np.repeat(
            np.fromiter(sorted(doc.counts), dtype=np.int32, count=len(doc.counts)),
            [doc.counts[v] for v in sorted(doc.counts)],
        ) if doc.counts else np.empty(0, dtype=np.int32)
        chunks.append(ids)
        doc_ptr[d + 1] = doc_ptr[d] + ids.size
        seeds[d] = _doc_seed(seed, doc.key)
    words = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int32)
    return doc_ptr, words.astype(np.int32), seeds


@dataclass
class LdaModel:
    K: int
    alpha: float
    eta: float
    iterations: int
    seed: int
    topic_word_counts: np.ndarray  # K x V
    topic_totals: np.ndarray  # K
    vocab: Vocabulary

    @property
    def V(self) -> int:
        return len(self.vocab)

    @property
    def phi(self) -> np.ndarray:
        """Smoothed topic-word distribution; each row sums to one."""
        denom = self.topic_totals[:, None] + self.V * self.eta
        return (self.topic_word_counts + self.eta) / denom

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "K": self.K,
            "alpha": self.alpha,
            "eta": self.eta,
            "iterations": self.iterations,
            "seed": self.seed,
            "vocab_hash": self.vocab.content_hash(),
            "vocab": self.vocab.to_dict(),
            "topic_word_counts": self.topic_word_counts.tolist(),
            "topic_totals": self.topic_totals.tolist(),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, data: dict) -> "LdaModel":
        if data.get("format_version") != MODEL_FORMAT_VERSION:
            raise LdaError(f"unsupported model format {data.get('format_version')!r}")
        vocab = Vocabulary.from_dict(data["vocab"])
        if vocab.content_hash() != data["vocab_hash"]:
            raise LdaError("vocabulary hash mismatch; model artifact is corrupt")
        model = cls(
            K=data["K"],
            alpha=data["alpha"],
            eta=data["eta"],
            iterations=data["iterations"],
            seed=data["seed"],
            topic_word_counts=np.asarray(data["topic_word_counts"], dtype=np.int64),
            topic_totals=np.asarray(data["topic_totals"], dtype=np.int64),
            vocab=vocab,
        )
        if not np.array_equal(model.topic_word_counts.sum(axis=1), model.topic_totals):
            raise LdaError("count matrices inconsistent; model artifact is corrupt")
        return model

    @classmethod
    def load(cls, path) -> "LdaModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class TopicAssignment:
    review_id: str
    index: int
    dominant: int | None
    theta: np.ndarray | None = None

    @property
    def key(self) -> tuple[str, int]:
        return (self.review_id, self.index)


def train_lda(
    corpus: list[BowDocument],
    vocab: Vocabulary,
    K: int,
    alpha: float,
    eta: float,
    iterations: int = 500,
    seed: int = 0,
) -> LdaModel:
    """Fit a topic model by collapsed Gibbs sampling, taking the final sweep's state."""
    if K < 1:
        raise LdaError(f"K must be >= 1, got {K}")
    if alpha <= 0 or eta <= 0:
        raise LdaError("alpha and eta must be positive")
    if iterations < 1:
        raise LdaError(f"iterations must be >= 1, got {iterations}")
    if len(vocab) == 0:
        raise LdaError("vocabulary is empty")
    if not corpus:
        raise LdaError("corpus is empty")
    for doc in corpus:
        for v in doc.counts:
            if not (0 <= v < len(vocab)):
                raise LdaError(f"document {doc.key} has token id {v} outside vocabulary")

    docs = sorted(corpus, key=lambda d: d.key)
    doc_ptr, words, seeds = _flatten(docs, seed)
    if words.size == 0:
        raise LdaError("corpus contains no tokens")
    _, _, n_kv, n_k = _gibbs_train(
        doc_ptr, words, seeds, K, len(vocab), float(alpha), float(eta), iterations
    )
    return LdaModel(
        K=K,
        alpha=float(alpha),
        eta=float(eta),
        iterations=iterations,
        seed=seed,
        topic_word_counts=n_kv,
        topic_totals=n_k,
        vocab=vocab,
    )


def infer_topics(
    model: LdaModel,
    doc: BowDocument,
    fold_in_iterations: int = 50,
    seed: int = 0,
) -> np.ndarray:
    """Fold a single document into a trained model; returns its topic distribution."""
    if not doc.counts:
        raise NoTopicError(f"document {doc.key} has no tokens; no assignable topic")
    return _infer_many(model, [doc], fold_in_iterations, seed)[0]


def _infer_many(model, docs, fold_in_iterations, seed) -> np.ndarray:
    for doc in docs:
        for v in doc.counts:
            if not (0 <= v < model.V):
                raise LdaError(f"document {doc.key} has token id {v} outside vocabulary")
    doc_ptr, words, seeds = _flatten(docs, seed)
    n_dk = _gibbs_fold_in(
        doc_ptr,
        words,
        seeds,
        model.topic_word_counts,
        model.topic_totals,
        model.K,
        model.V,
        model.alpha,
        model.eta,
        fold_in_iterations,
    )
    lengths = (doc_ptr[1:] - doc_ptr[:-1]).astype(np.float64)
    lengths[lengths == 0] = np.nan  # empty docs have no distribution
    return (n_dk + model.alpha) / (lengths[:, None] + model.K * model.alpha)


def assign_topics(
    model: LdaModel,
    docs: list[BowDocument],
    fold_in_iterations: int = 50,
    seed: int = 0,
) -> list[TopicAssignment]:
    """Infer the dominant topic per document; empty documents come back with none."""
    thetas = _infer_many(model, docs, fold_in_iterations, seed)
    out = []
    for doc, theta in zip(docs, thetas):
        if not doc.counts:
            out.append(TopicAssignment(doc.review_id, doc.index, None, None))
        else:
            out.append(
                TopicAssignment(doc.review_id, doc.index, dominant_topic(theta), theta)
            )
    return out


def dominant_topic(theta) -> int:
    """Index of the largest topic weight; ties go to the lowest index."""
    theta = np.asarray(theta)
    if theta.ndim != 1 or theta.size == 0:
        raise LdaError("theta must be a non-empty vector")
    return int(np.argmax(theta))


def top_words(model: LdaModel, topic: int, n: int = 10) -> list[tuple[str, float]]:
    """Top-n tokens of a topic by probability, ties broken by token id."""
    if not (0 <= topic < model.K):
        raise LdaError(f"topic {topic} out of range [0, {model.K})")
    if n <= 0:
        return []
    phi_row = model.phi[topic]
    order = np.lexsort((np.arange(phi_row.size), -phi_row))
    return [(model.vocab.token_of(int(v)), float(phi_row[v])) for v in order[:n]]
