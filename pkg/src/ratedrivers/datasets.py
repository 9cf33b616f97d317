"""Bundled synthetic corpora: nonlinear and ordinal-noise design matrices for
classifier checks, plus a hotel-review text generator for end-to-end runs."""

from __future__ import annotations

import json

import numpy as np

from .corpus import Review
from .features import THREE_CLASS, AspectVector, DesignMatrix, build_matrix

# Paper-like rating imbalance: most reviews are enthusiastic, few are angry.
RATING_WEIGHTS = {1: 0.0398, 2: 0.0395, 3: 0.10, 4: 0.176, 5: 0.6447}


def xor_design_matrix(n_rows: int = 2000, seed: int = 0) -> DesignMatrix:
    """Three classes no line can separate: diagonal quadrant pairs vs. a center blob.

    Positive sits on both (+,+) and (-,-) clusters, Negative on (+,-) and
    (-,+), Neutral at the origin, so every class mean collapses to zero and
    linear models fall to chance while depth-2 trees carve it cleanly.
    """
    rng = np.random.default_rng(seed)
    vectors = []
    for i in range(n_rows):
        kind = i % 3
        if kind == 0:  # Positive: diagonal quadrants
            sign = 1.0 if rng.uniform() < 0.5 else -1.0
            center = np.array([2.0 * sign, 2.0 * sign])
            rating = 5
        elif kind == 1:  # Negative: anti-diagonal quadrants
            sign = 1.0 if rng.uniform() < 0.5 else -1.0
            center = np.array([2.0 * sign, -2.0 * sign])
            rating = 1
        else:  # Neutral: center blob
            center = np.zeros(2)
            rating = 3
        scores = center + rng.normal(scale=0.6, size=2)
        vectors.append(AspectVector(review_id=f"x{i:05d}", scores=scores, rating=rating))
    return build_matrix(vectors, THREE_CLASS)


def ordinal_aspect_vectors(
    n_rows: int = 1500, n_topics: int = 7, seed: int = 0, slip: float = 0.3
) -> list[AspectVector]:
    """Imbalanced ratings whose latent quality sometimes slips one step.

    Each review reports a rating from the heavy-top distribution, but with
    probability `slip` its latent quality (which drives the features) comes
    from an adjacent rating's band.  Exact stars are therefore noisy at every
    boundary while the coarse negative/neutral/positive split stays clean.
    """
    rng = np.random.default_rng(seed)
    ratings = list(RATING_WEIGHTS)
    weights = np.array([RATING_WEIGHTS[r] for r in ratings])
    weights = weights / weights.sum()
    bounds = np.concatenate([[0.0], np.cumsum(weights)])
    vectors = []
    for i in range(n_rows):
        r_idx = int(rng.choice(len(ratings), p=weights))
        rating = ratings[r_idx]
        band = r_idx
        u = rng.uniform()
        if u < slip / 2 and band > 0:
            band -= 1
        elif u < slip and band < len(ratings) - 1:
            band += 1
        q = rng.uniform(bounds[band], bounds[band + 1])
        latent = 9.0 * (2.0 * q - 1.0)
        scores = np.zeros(n_topics)
        for k in range(n_topics):
            if rng.uniform() < 0.75:
                scores[k] = latent + rng.normal(scale=2.0)
        vectors.append(AspectVector(review_id=f"o{i:05d}", scores=scores, rating=rating))
    return vectors


_ASPECTS = {
    "activity": ["pool", "beach", "spa", "gym", "garden"],
    "location": ["location", "view", "neighborhood", "market", "station"],
    "staff": ["staff", "service", "reception", "manager", "concierge"],
    "rooms": ["room", "bed", "bathroom", "balcony", "suite"],
    "food": ["food", "breakfast", "dinner", "buffet", "restaurant"],
}

_POSITIVE_WORDS = [
    "amazing", "beautiful", "clean", "comfortable", "delicious", "excellent",
    "fantastic", "friendly", "great", "helpful", "lovely", "nice", "perfect",
    "pleasant", "spacious", "superb", "wonderful",
]
_NEGATIVE_WORDS = [
    "awful", "bad", "boring", "broken", "dirty", "disappointing", "filthy",
    "horrible", "mediocre", "noisy", "poor", "rude", "shabby", "slow",
    "smelly", "terrible", "uncomfortable",
]

_TEMPLATES = [
    "The {noun} was really {adj}.",
    "We found the {noun} very {adj}!",
    "Our {noun} felt {adj} during the whole stay.",
    "Honestly the {noun} seemed {adj} to us.",
    "A {adj} {noun} made a difference.",
    "Such a {adj} {noun}?",
]

_STATES = [
    "Goa", "Kerala", "Rajasthan", "Maharashtra", "Delhi",
    "Karnataka", "Tamil Nadu", "West Bengal", "Punjab", "Assam",
]

# Chance a sentence leans positive, by the review's star rating.
_POSITIVE_LEAN = {1: 0.08, 2: 0.25, 3: 0.5, 4: 0.8, 5: 0.95}


def demo_reviews(n_reviews: int = 500, seed: int = 0) -> list[Review]:
    """Generate rated hotel reviews whose wording tracks the rating."""
    rng = np.random.default_rng(seed)
    ratings = list(RATING_WEIGHTS)
    weights = np.array([RATING_WEIGHTS[r] for r in ratings])
    weights = weights / weights.sum()
    aspects = sorted(_ASPECTS)
    reviews = []
    for i in range(n_reviews):
        rating = ratings[int(rng.choice(len(ratings), p=weights))]
        n_sentences = int(rng.integers(2, 7))
        sentences = []
        for _ in range(n_sentences):
            if rng.uniform() < 0.02:  # the odd emoji-only sentence
                sentences.append("\U0001F44D\U0001F44D.")
                continue
            aspect = aspects[int(rng.integers(len(aspects)))]
            noun = _ASPECTS[aspect][int(rng.integers(len(_ASPECTS[aspect])))]
            positive = rng.uniform() < _POSITIVE_LEAN[rating]
            bank = _POSITIVE_WORDS if positive else _NEGATIVE_WORDS
            adj = bank[int(rng.integers(len(bank)))]
            template = _TEMPLATES[int(rng.integers(len(_TEMPLATES)))]
            sentences.append(template.format(noun=noun, adj=adj))
        reviews.append(
            Review(
                review_id=f"r{i:05d}",
                hotel_id=f"h{int(rng.integers(1, 21)):03d}",
                rating=rating,
                text=" ".join(sentences),
                state=_STATES[int(rng.integers(len(_STATES)))],
            )
        )
    return reviews


def write_reviews_jsonl(reviews: list[Review], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reviews:
            row = {
                "review_id": r.review_id,
                "hotel_id": r.hotel_id,
                "rating": r.rating,
                "text": r.text,
            }
            if r.state is not None:
                row["state"] = r.state
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


DEMO_CONFIG = """\
[input]
path = {reviews}
format = jsonl

[preprocess]
min_df = 5

[topics]
mode = fixed
k = 5
alpha = 0.2
eta = 0.1
iterations = 200
fold_in_iterations = 30
top_words = 10
window = 110

[sentiment]
provider = lexicon
epsilon = 1e-4

[features]
aggregation = sum

[models]
classifiers = logistic, random_forest, gradient_boosting, gradient_boosting_hist
folds = 3
rf_trees = 60
rf_depth = 8
gbdt_rounds = 40
gbdt_depth = 3

[explain]
model = gradient_boosting
scheme = three_class

[run]
seed = {seed}
out = {out}
"""


def write_demo_config(path, reviews="reviews.jsonl", out="out", seed=7) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(DEMO_CONFIG.format(reviews=reviews, out=out, seed=seed))
