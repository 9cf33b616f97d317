"""Binary sentence sentiment via pluggable providers, and the signed log-odds transform."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

from .corpus import Sentence

POSITIVE = "POSITIVE"
NEGATIVE = "NEGATIVE"
DEFAULT_EPSILON = 1e-4


class SentimentError(ValueError):
    pass


class NoSentimentError(SentimentError):
    """Raised when a sentence carries nothing to score (e.g. emoji-only)."""


@dataclass(frozen=True)
class SentimentPrediction:
    """Predicted label with the probability of that label (>= 0.5 by convention)."""

    label: str
    p: float

    def __post_init__(self):
        if self.label not in (POSITIVE, NEGATIVE):
            raise SentimentError(f"label must be POSITIVE or NEGATIVE, got {self.label!r}")
        if not (0.5 <= self.p <= 1.0):
            raise SentimentError(f"p must lie in [0.5, 1], got {self.p}")


@dataclass(frozen=True)
class SentimentScore:
    """Signed log-odds sentiment: positive for POSITIVE labels, negative otherwise."""

    value: float
    review_id: str = ""
    sentence_index: int = -1

    @property
    def key(self) -> tuple[str, int]:
        return (self.review_id, self.sentence_index)


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def logit_score(
    pred: SentimentPrediction,
    epsilon: float = DEFAULT_EPSILON,
    key: tuple[str, int] | None = None,
) -> SentimentScore:
    """Convert a binary prediction into a signed log-odds score.

    The probability is clamped to 1 - epsilon before the transform, so the
    score magnitude never exceeds ln((1 - epsilon) / epsilon).  NEGATIVE
    predictions get the negated magnitude.
    """
    if not (0.0 < epsilon < 0.5):
        raise SentimentError(f"epsilon must lie in (0, 0.5), got {epsilon}")
    p = min(pred.p, 1.0 - epsilon)
    ceiling = math.log((1.0 - epsilon) / epsilon)
    magnitude = min(math.log(p / (1.0 - p)), ceiling)
    value = magnitude if pred.label == POSITIVE else -magnitude
    rid, idx = key if key is not None else ("", -1)
    return SentimentScore(value=value, review_id=rid, sentence_index=idx)


def lexicon_predict(tokens, lexicon: dict[str, float], bias: float = 0.0) -> SentimentPrediction:
    """Score tokens against a polarity lexicon through a logistic link."""
    tokens = list(tokens)
    if not tokens:
        raise NoSentimentError("cannot score an empty token list")
    s = bias + sum(lexicon.get(tok, 0.0) for tok in tokens)
    p_pos = sigmoid(s)
    if p_pos >= 0.5:
        return SentimentPrediction(POSITIVE, p_pos)
    return SentimentPrediction(NEGATIVE, 1.0 - p_pos)


def default_lexicon() -> dict[str, float]:
    text = resources.files("ratedrivers.data").joinpath("sentiment_lexicon_en.txt").read_text("utf-8")
    return load_lexicon_lines(text.splitlines())


def load_lexicon_lines(lines) -> dict[str, float]:
    lexicon: dict[str, float] = {}
    for ln in lines:
        if not ln.strip() or ln.startswith("#"):
            continue
        token, _, weight = ln.partition("\t")
        if not weight:
            raise SentimentError(f"lexicon line without tab separator: {ln!r}")
        lexicon[token.strip()] = float(weight)
    return lexicon


def load_lexicon(path) -> dict[str, float]:
    with open(path, encoding="utf-8") as fh:
        return load_lexicon_lines(fh)


@dataclass
class ExternalScores:
    predictions: dict[tuple[str, int], SentimentPrediction]
    warnings: list[str]

    @property
    def n_rejected(self) -> int:
        return len(self.warnings)


def load_external_scores(path) -> ExternalScores:
    """Read a sidecar CSV of externally computed sentence sentiments.

    Columns: review_id, sentence_index, label (POSITIVE/NEGATIVE), p in (0, 1).
    Rows with p at or outside {0, 1} are rejected with a warning; structurally
    malformed lines are fatal.  Rows where p < 0.5 are canonicalized to the
    complementary label so predictions always carry the majority-label form.
    """
    predictions: dict[tuple[str, int], SentimentPrediction] = {}
    warnings: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if lineno == 1 and row[0].strip().lower() == "review_id":
                continue
            if len(row) != 4:
                raise SentimentError(f"line {lineno}: expected 4 columns, got {len(row)}")
            rid, idx_s, label, p_s = (c.strip() for c in row)
            try:
                idx = int(idx_s)
                p = float(p_s)
            except ValueError as exc:
                raise SentimentError(f"line {lineno}: {exc}") from exc
            if label not in (POSITIVE, NEGATIVE):
                raise SentimentError(f"line {lineno}: bad label {label!r}")
            if not (0.0 < p < 1.0):
                warnings.append(f"line {lineno}: p={p} outside (0, 1); row rejected")
                continue
            if p < 0.5:
                label = NEGATIVE if label == POSITIVE else POSITIVE
                p = 1.0 - p
            predictions[(rid, idx)] = SentimentPrediction(label, p)
    return ExternalScores(predictions=predictions, warnings=warnings)


class LexiconProvider:
    """Built-in sentiment provider: polarity lexicon behind a logistic link."""

    name = "lexicon"

    def __init__(self, lexicon: dict[str, float] | None = None, bias: float = 0.0):
        self.lexicon = dict(lexicon) if lexicon is not None else default_lexicon()
        self.bias = bias

    def predict(self, sentence: Sentence) -> SentimentPrediction:
        return lexicon_predict(sentence.tokens, self.lexicon, self.bias)


class ExternalScoresProvider:
    """Sentiment provider backed by a sidecar file of precomputed predictions."""

    name = "external"

    def __init__(self, scores: ExternalScores):
        self.scores = scores
        self.unknown_keys: list[tuple[str, int]] = []

    def predict(self, sentence: Sentence) -> SentimentPrediction:
        pred = self.scores.predictions.get(sentence.key)
        if pred is None:
            self.unknown_keys.append(sentence.key)
            raise NoSentimentError(f"no external score for sentence {sentence.key}")
        return pred
