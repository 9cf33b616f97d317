"""Review ingestion, sentence segmentation, token preprocessing, and bag-of-words building."""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

VALID_RATINGS = (1, 2, 3, 4, 5)

# A sentence ends at a run of '.', '!' or '?' followed by whitespace or end-of-text.
_SENTENCE = re.compile(r"(.*?[.!?]+)(\s+|$)", re.S)
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)

# Ordered suffix rules; first match wins, applied to a fixpoint.  The identity
# rule ("ss" -> "ss") shields words like "glass" from the bare "s" rule.
DEFAULT_SUFFIX_RULES = (
    ("sses", "ss"),
    ("ies", "y"),
    ("ss", "ss"),
    ("s", ""),
    ("ing", ""),
    ("ed", ""),
)

_MIN_STEM = 3


class CorpusError(ValueError):
    """Raised for unusable corpus-level inputs (unreadable files, bad config)."""


@dataclass(frozen=True)
class Review:
    review_id: str
    hotel_id: str
    rating: int
    text: str
    state: str | None = None


@dataclass
class ReviewSet:
    reviews: list[Review]
    n_skipped: int = 0
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.reviews)

    def __iter__(self):
        return iter(self.reviews)


@dataclass(frozen=True)
class Sentence:
    review_id: str
    index: int
    raw: str
    tokens: tuple[str, ...] = ()

    @property
    def key(self) -> tuple[str, int]:
        return (self.review_id, self.index)


@dataclass(frozen=True)
class BowDocument:
    review_id: str
    index: int
    counts: dict[int, int]

    @property
    def key(self) -> tuple[str, int]:
        return (self.review_id, self.index)

    @property
    def n_tokens(self) -> int:
        return sum(self.counts.values())


def _load_lines(name: str) -> list[str]:
    text = resources.files("ratedrivers.data").joinpath(name).read_text("utf-8")
    return [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def default_stopwords() -> frozenset[str]:
    return frozenset(_load_lines("stopwords_en.txt"))


def default_lemmas() -> dict[str, str]:
    return dict(parse_lemma_lines(_load_lines("lemmas_en.txt")))


def read_wordlist(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]


def parse_lemma_lines(lines) -> list[tuple[str, str]]:
    pairs = []
    for ln in lines:
        token, _, lemma = ln.partition("\t")
        if not lemma:
            raise CorpusError(f"lemma line without tab separator: {ln!r}")
        pairs.append((token.strip(), lemma.strip()))
    return pairs


@dataclass(frozen=True)
class PreprocessConfig:
    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    min_df: int = 5
    lemma_overrides: dict = field(default_factory=default_lemmas)
    suffix_rules: tuple = DEFAULT_SUFFIX_RULES
    lowercase: bool = True

    def __post_init__(self):
        if self.min_df < 1:
            raise CorpusError(f"min_df must be >= 1, got {self.min_df}")


def load_reviews(path, fmt: str = "jsonl") -> ReviewSet:
    """Read rated reviews from a JSONL or CSV file, skipping malformed rows."""
    if fmt == "jsonl":
        rows = _iter_jsonl(path)
    elif fmt == "csv":
        rows = _iter_csv(path)
    else:
        raise CorpusError(f"unknown format {fmt!r}; expected 'jsonl' or 'csv'")

    out = ReviewSet(reviews=[])
    seen: set[str] = set()
    for lineno, row, err in rows:
        if err is not None:
            out.n_skipped += 1
            out.warnings.append(f"row {lineno}: {err}")
            continue
        problem = _validate_row(row, seen)
        if problem is not None:
            out.n_skipped += 1
            out.warnings.append(f"row {lineno}: {problem}")
            continue
        seen.add(row["review_id"])
        state = row.get("state")
        out.reviews.append(
            Review(
                review_id=row["review_id"],
                hotel_id=row["hotel_id"],
                rating=int(row["rating"]),
                text=row["text"],
                state=state if state not in (None, "") else None,
            )
        )
    return out


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, None, f"invalid JSON ({exc.msg})"
                continue
            if not isinstance(row, dict):
                yield lineno, None, "row is not an object"
                continue
            yield lineno, row, None


def _iter_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        missing = {"review_id", "hotel_id", "rating", "text"} - set(reader.fieldnames)
        if missing:
            raise CorpusError(f"CSV header missing columns: {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            raw_rating = row.get("rating")
            try:
                row["rating"] = int(raw_rating)
            except (TypeError, ValueError):
                yield lineno, None, f"rating {raw_rating!r} is not an integer"
                continue
            yield lineno, row, None


def _validate_row(row: dict, seen: set[str]) -> str | None:
    rid = row.get("review_id")
    if not isinstance(rid, str) or not rid:
        return "missing review_id"
    if rid in seen:
        return f"duplicate review_id {rid!r}"
    if not isinstance(row.get("hotel_id"), str) or not row["hotel_id"]:
        return "missing hotel_id"
    rating = row.get("rating")
    if isinstance(rating, bool) or not isinstance(rating, int):
        return f"rating {rating!r} is not an integer"
    if rating not in VALID_RATINGS:
        return f"rating {rating} outside 1..5"
    if not isinstance(row.get("text"), str):
        return "missing text"
    return None


def _segment_raw(text: str) -> tuple[list[str], list[str]]:
    """Split text into sentences plus the delimiter strings around them.

    Joining delims[0] + s[0] + delims[1] + s[1] + ... + delims[-1]
    reproduces the input exactly.
    """
    lead = re.match(r"\s*", text).group(0)
    body = text[len(lead):]
    sentences: list[str] = []
    delims: list[str] = [lead]
    pos = 0
    for m in _SENTENCE.finditer(body):
        sentences.append(m.group(1))
        delims.append(m.group(2))
        pos = m.end()
    if pos < len(body):
        sentences.append(body[pos:])
        delims.append("")
    return sentences, delims


def segment_sentences(review: Review) -> list[Sentence]:
    """Break a review into sentences at '.', '!', '?' followed by whitespace or end."""
    raw_sentences, _ = _segment_raw(review.text)
    return [
        Sentence(review_id=review.review_id, index=i, raw=raw)
        for i, raw in enumerate(raw_sentences)
    ]


def _lemmatize(token: str, config: PreprocessConfig) -> str:
    current = token
    for _ in range(16):  # cycle guard; well-formed rule sets reach a fixpoint fast
        replaced = config.lemma_overrides.get(current)
        if replaced is None:
            replaced = current
            for suffix, repl in config.suffix_rules:
                if not current.endswith(suffix):
                    continue
                stem = current[: len(current) - len(suffix)] + repl
                if len(stem) >= _MIN_STEM:
                    replaced = stem
                break
        if replaced == current:
            return current
        current = replaced
    return current


def preprocess(text: str, config: PreprocessConfig) -> list[str]:
    """Normalize raw sentence text into cleaned, lemmatized tokens."""
    if config.lowercase:
        text = text.lower()
    tokens = _TOKEN.findall(text)
    out = []
    for tok in tokens:
        if any(ch.isdigit() for ch in tok):
            continue
        if tok.lower() in config.stopwords:  # stopword comparison is case-blind
            continue
        lemma = _lemmatize(tok, config)
        if lemma.lower() in config.stopwords:
            continue
        out.append(lemma)
    return out


def preprocess_review(review: Review, config: PreprocessConfig) -> list[Sentence]:
    return [
        Sentence(s.review_id, s.index, s.raw, tuple(preprocess(s.raw, config)))
        for s in segment_sentences(review)
    ]


class Vocabulary:
    """Dense token-id mapping with per-token sentence document frequencies."""

    def __init__(self, tokens: list[str], doc_freq: list[int]):
        self.tokens = list(tokens)
        self.doc_freq = list(doc_freq)
        self._ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._ids) != len(self.tokens):
            raise CorpusError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id_of(self, token: str) -> int:
        return self._ids[token]

    def token_of(self, token_id: int) -> str:
        return self.tokens[token_id]

    def doc_freq_of(self, token: str) -> int:
        return self.doc_freq[self._ids[token]]

    def content_hash(self) -> str:
        payload = "\n".join(self.tokens).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def to_dict(self) -> dict:
        return {"tokens": self.tokens, "doc_freq": self.doc_freq}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(data["tokens"], data["doc_freq"])


def build_vocabulary(sentences: list[Sentence], config: PreprocessConfig) -> Vocabulary:
    """Collect tokens with sentence-level document frequency >= min_df."""
    df: dict[str, int] = {}
    for sent in sentences:
        for tok in set(sent.tokens):
            df[tok] = df.get(tok, 0) + 1
    kept = sorted(tok for tok, n in df.items() if n >= config.min_df)
    return Vocabulary(kept, [df[tok] for tok in kept])


def to_bow(sentence: Sentence, vocab: Vocabulary) -> BowDocument:
    """Count in-vocabulary tokens of a sentence; out-of-vocabulary tokens are dropped."""
    counts: dict[int, int] = {}
    for tok in sentence.tokens:
        tid = vocab._ids.get(tok)
        if tid is None:
            continue
        counts[tid] = counts.get(tid, 0) + 1
    return BowDocument(sentence.review_id, sentence.index, counts)


@dataclass
class SyntheticCorpus:
    docs: list[BowDocument]
    topic_word: np.ndarray  # K x V ground-truth rows
    doc_topic: np.ndarray  # n_docs x K ground-truth mixtures
    vocab: Vocabulary


def generate_synthetic(
    K: int,
    V: int,
    n_docs: int,
    doc_len: int,
    alpha: float,
    eta: float,
    seed: int,
) -> SyntheticCorpus:
    """Sample a corpus from the standard topic-mixture generative process.

    Each document draws a topic mixture from Dirichlet(alpha), each topic a
    word distribution from Dirichlet(eta); tokens are drawn topic-first.
    """
    if K < 1:
        raise CorpusError(f"K must be >= 1, got {K}")
    if V < K:
        raise CorpusError(f"V must be >= K, got V={V}, K={K}")
    if alpha <= 0 or eta <= 0:
        raise CorpusError("alpha and eta must be positive")
    rng = np.random.default_rng(seed)
    topic_word = rng.dirichlet(np.full(V, eta), size=K)
    doc_topic = rng.dirichlet(np.full(K, alpha), size=n_docs)
    width = max(4, len(str(V - 1)))
    vocab = Vocabulary([f"w{v:0{width}d}" for v in range(V)], [0] * V)
    docs = []
    df = np.zeros(V, dtype=int)
    for d in range(n_docs):
        per_topic = rng.multinomial(doc_len, doc_topic[d])
        word_counts = np.zeros(V, dtype=int)
        for k in range(K):
            if per_topic[k]:
                word_counts += rng.multinomial(per_topic[k], topic_word[k])
        ids = np.nonzero(word_counts)[0]
        df[ids] += 1
        docs.append(
            BowDocument(f"syn{d:05d}", 0, {int(v): int(word_counts[v]) for v in ids})
        )
    vocab.doc_freq = [int(n) for n in df]
    return SyntheticCorpus(docs=docs, topic_word=topic_word, doc_topic=doc_topic, vocab=vocab)
