"""Per-review aspect-sentiment vectors and the rating design matrix."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .corpus import VALID_RATINGS

FIVE_CLASS = "five_class"
THREE_CLASS = "three_class"

FIVE_CLASS_NAMES = ["1", "2", "3", "4", "5"]
THREE_CLASS_NAMES = ["Negative", "Neutral", "Positive"]

AGGREGATIONS = ("sum", "mean", "max")


class FeaturesError(ValueError):
    pass


def class_names(scheme: str) -> list[str]:
    if scheme == FIVE_CLASS:
        return list(FIVE_CLASS_NAMES)
    if scheme == THREE_CLASS:
        return list(THREE_CLASS_NAMES)
    raise FeaturesError(f"unknown label scheme {scheme!r}")


def collapse_labels(rating: int, scheme: str) -> str:
    """Map a 1..5 rating to its class label under the given scheme."""
    if rating not in VALID_RATINGS:
        raise FeaturesError(f"rating {rating} outside 1..5")
    if scheme == FIVE_CLASS:
        return str(rating)
    if scheme == THREE_CLASS:
        if rating <= 2:
            return "Negative"
        if rating == 3:
            return "Neutral"
        return "Positive"
    raise FeaturesError(f"unknown label scheme {scheme!r}")


@dataclass
class AspectVector:
    """One review as topic-wise aggregated sentiment; zero marks an absent topic."""

    review_id: str
    scores: np.ndarray
    rating: int


def _score_value(score) -> float:
    return float(score.value) if hasattr(score, "value") else float(score)


def assemble(
    review_id: str,
    sentence_records,
    rating: int,
    K: int,
    aggregation: str = "sum",
) -> AspectVector:
    """Aggregate per-sentence (topic, sentiment score) pairs into a length-K vector.

    Records with a missing topic or missing score contribute nothing; topics
    with no contributing sentence stay at zero.
    """
    if aggregation not in AGGREGATIONS:
        raise FeaturesError(f"unknown aggregation {aggregation!r}; expected one of {AGGREGATIONS}")
    if rating not in VALID_RATINGS:
        raise FeaturesError(f"rating {rating} outside 1..5")
    per_topic: dict[int, list[float]] = {}
    for topic, score in sentence_records:
        if topic is None or score is None:
            continue
        if not (0 <= topic < K):
            raise FeaturesError(f"topic id {topic} outside [0, {K})")
        per_topic.setdefault(int(topic), []).append(_score_value(score))
    scores = np.zeros(K)
    for k, values in per_topic.items():
        if aggregation == "sum":
            scores[k] = sum(values)
        elif aggregation == "mean":
            scores[k] = sum(values) / len(values)
        else:
            scores[k] = max(values)
    return AspectVector(review_id=review_id, scores=scores, rating=rating)


@dataclass
class DesignMatrix:
    """Aspect vectors stacked into features plus labels under one scheme."""

    X: np.ndarray
    review_ids: list[str]
    ratings: list[int]
    scheme: str
    feature_names: list[str]
    labels: list[str] = field(init=False)
    class_names: list[str] = field(init=False)

    def __post_init__(self):
        self.labels = [collapse_labels(r, self.scheme) for r in self.ratings]
        self.class_names = class_names(self.scheme)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def class_distribution(self) -> dict[str, float]:
        """Fraction of rows per class, for imbalance reporting."""
        out = {name: 0 for name in self.class_names}
        for label in self.labels:
            out[label] += 1
        total = max(len(self.labels), 1)
        return {name: count / total for name, count in out.items()}

    def with_scheme(self, scheme: str) -> "DesignMatrix":
        return DesignMatrix(
            X=self.X,
            review_ids=self.review_ids,
            ratings=self.ratings,
            scheme=scheme,
            feature_names=self.feature_names,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            header = ["review_id"] + [f"topic_{k + 1}" for k in range(self.n_features)] + ["rating"]
            if self.scheme == THREE_CLASS:
                header.append("class")
            writer.writerow(header)
            for i in range(self.n_rows):
                row = [self.review_ids[i]]
                row += [f"{v:.3f}" for v in self.X[i]]
                row.append(self.ratings[i])
                if self.scheme == THREE_CLASS:
                    row.append(self.labels[i])
                writer.writerow(row)


def build_matrix(
    vectors: list[AspectVector],
    scheme: str,
    feature_names: list[str] | None = None,
) -> DesignMatrix:
    """Stack aspect vectors in input order into a design matrix."""
    if vectors:
        K = vectors[0].scores.shape[0]
        for v in vectors:
            if v.scores.shape[0] != K:
                raise FeaturesError(
                    f"mixed vector lengths: {v.review_id} has {v.scores.shape[0]}, expected {K}"
                )
        X = np.vstack([v.scores for v in vectors])
    else:
        K = len(feature_names) if feature_names else 0
        X = np.zeros((0, K))
    if feature_names is None:
        feature_names = [f"Topic {k + 1}" for k in range(K)]
    if len(feature_names) != K:
        raise FeaturesError("feature_names length does not match vector length")
    return DesignMatrix(
        X=X,
        review_ids=[v.review_id for v in vectors],
        ratings=[v.rating for v in vectors],
        scheme=scheme,
        feature_names=list(feature_names),
    )
