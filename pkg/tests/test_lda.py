import numpy as np
import pytest

from ratedrivers.corpus import BowDocument, Vocabulary, generate_synthetic
from ratedrivers.lda import (
    LdaError,
    LdaModel,
    NoTopicError,
    assign_topics,
    dominant_topic,
    infer_topics,
    top_words,
    train_lda,
)
from tests.conftest import make_planted_corpus


def top_word_set(model, topic, n):
    return {w for w, _ in top_words(model, topic, n)}


# ------------------------------------------------------------ training


def test_single_topic_phi_is_smoothed_corpus_distribution():
    docs, vocab = make_planted_corpus()
    model = train_lda(docs, vocab, K=1, alpha=0.3, eta=0.5, iterations=5, seed=0)
    counts = np.zeros(len(vocab))
    for doc in docs:
        for v, c in doc.counts.items():
            counts[v] += c
    expected = (counts + 0.5) / (counts.sum() + len(vocab) * 0.5)
    assert np.allclose(model.phi[0], expected, atol=1e-12)
    theta = infer_topics(model, docs[0], fold_in_iterations=5, seed=0)
    assert theta.shape == (1,)
    assert theta[0] == pytest.approx(1.0)


def test_planted_topics_recovered(planted):
    _, _, model = planted
    tops = [top_word_set(model, k, 2) for k in range(2)]
    assert sorted(map(sorted, tops)) == [["A", "B"], ["C", "D"]]


def test_training_is_seed_deterministic(planted):
    docs, vocab, model = planted
    again = train_lda(docs, vocab, K=2, alpha=0.1, eta=0.01, iterations=200, seed=3)
    assert np.array_equal(model.topic_word_counts, again.topic_word_counts)
    assert np.array_equal(model.topic_totals, again.topic_totals)


def test_training_invariant_to_document_order(planted):
    docs, vocab, model = planted
    shuffled = list(reversed(docs))
    again = train_lda(shuffled, vocab, K=2, alpha=0.1, eta=0.01, iterations=200, seed=3)
    assert np.array_equal(model.topic_word_counts, again.topic_word_counts)


def test_count_conservation_and_normalization(planted):
    docs, _, model = planted
    total_tokens = sum(d.n_tokens for d in docs)
    assert model.topic_word_counts.sum() == total_tokens
    assert np.array_equal(model.topic_word_counts.sum(axis=1), model.topic_totals)
    assert np.all(model.topic_word_counts >= 0)
    assert np.allclose(model.phi.sum(axis=1), 1.0, atol=1e-9)


def test_train_validates_inputs():
    docs, vocab = make_planted_corpus()
    with pytest.raises(LdaError):
        train_lda([], vocab, K=2, alpha=0.1, eta=0.1)
    with pytest.raises(LdaError):
        train_lda(docs, Vocabulary([], []), K=2, alpha=0.1, eta=0.1)
    with pytest.raises(LdaError):
        train_lda(docs, vocab, K=0, alpha=0.1, eta=0.1)
    with pytest.raises(LdaError):
        train_lda(docs, vocab, K=2, alpha=-1.0, eta=0.1)
    with pytest.raises(LdaError):
        train_lda([BowDocument("r", 0, {99: 1})], vocab, K=2, alpha=0.1, eta=0.1)
    with pytest.raises(LdaError):
        train_lda([BowDocument("r", 0, {})], vocab, K=2, alpha=0.1, eta=0.1)


# ------------------------------------------------------------ inference


def test_infer_empty_doc_is_no_topic_error(planted):
    _, _, model = planted
    with pytest.raises(NoTopicError):
        infer_topics(model, BowDocument("e", 0, {}))


def test_assign_topics_maps_empty_docs_to_missing(planted):
    docs, _, model = planted
    batch = [docs[0], BowDocument("emoji", 0, {}), docs[1]]
    assignments = assign_topics(model, batch, fold_in_iterations=20, seed=1)
    assert assignments[1].dominant is None
    assert assignments[1].theta is None
    assert assignments[0].dominant is not None


def test_infer_planted_words_pick_planted_topic(planted):
    docs, _, model = planted
    ab_topic = 0 if top_word_set(model, 0, 2) == {"A", "B"} else 1
    theta = infer_topics(model, BowDocument("q", 0, {0: 4, 1: 2}), fold_in_iterations=50, seed=2)
    assert dominant_topic(theta) == ab_topic
    assert theta.sum() == pytest.approx(1.0, abs=1e-9)


def test_infer_deterministic_and_order_free(planted):
    docs, _, model = planted
    a = infer_topics(model, docs[5], fold_in_iterations=30, seed=7)
    b = assign_topics(model, [docs[3], docs[5]], fold_in_iterations=30, seed=7)[1].theta
    assert np.array_equal(a, b)


# ------------------------------------------------------------ dominant topic


def test_dominant_topic_argmax():
    assert dominant_topic([0.1, 0.7, 0.2]) == 1


def test_dominant_topic_tie_lowest_index():
    assert dominant_topic([0.5, 0.5]) == 0
    assert dominant_topic([1 / 7] * 7) == 0


def test_dominant_topic_rejects_bad_input():
    with pytest.raises(LdaError):
        dominant_topic([])


# ------------------------------------------------------------ top words


def test_top_words_ranked_by_probability(planted):
    _, _, model = planted
    pairs = top_words(model, 0, 2)
    assert pairs[0][1] >= pairs[1][1]


def test_top_words_edge_cases(planted):
    _, _, model = planted
    assert top_words(model, 0, 0) == []
    with pytest.raises(LdaError):
        top_words(model, 5, 3)


def test_top_words_tie_broken_by_token_id():
    vocab = Vocabulary(["a", "b", "c"], [1, 1, 1])
    model = LdaModel(
        K=1,
        alpha=0.1,
        eta=0.1,
        iterations=1,
        seed=0,
        topic_word_counts=np.array([[4, 4, 1]], dtype=np.int64),
        topic_totals=np.array([9], dtype=np.int64),
        vocab=vocab,
    )
    assert [w for w, _ in top_words(model, 0, 3)] == ["a", "b", "c"]


# ------------------------------------------------------------ serialization


def test_model_round_trip(tmp_path, planted):
    _, _, model = planted
    path = tmp_path / "model.json"
    model.save(path)
    loaded = LdaModel.load(path)
    assert loaded.K == model.K
    assert np.array_equal(loaded.topic_word_counts, model.topic_word_counts)
    assert loaded.vocab.tokens == model.vocab.tokens


def test_model_load_rejects_vocab_hash_mismatch(tmp_path, planted):
    import json

    _, _, model = planted
    path = tmp_path / "model.json"
    model.save(path)
    data = json.loads(path.read_text())
    data["vocab"]["tokens"][0] = "tampered"
    path.write_text(json.dumps(data))
    with pytest.raises(LdaError):
        LdaModel.load(path)


# ------------------------------------------------------------ chain checkpoints


def test_counter_rng_makes_prefix_runs_agree():
    # a 60-sweep run's state extends the 30-sweep run exactly, so intermediate
    # sweeps can be checkpointed by rerunning with a shorter budget
    syn = generate_synthetic(K=3, V=40, n_docs=50, doc_len=12, alpha=0.2, eta=0.1, seed=5)
    m30 = train_lda(syn.docs, syn.vocab, K=3, alpha=0.2, eta=0.1, iterations=30, seed=11)
    m60 = train_lda(syn.docs, syn.vocab, K=3, alpha=0.2, eta=0.1, iterations=60, seed=11)
    total = sum(d.n_tokens for d in syn.docs)
    assert m30.topic_word_counts.sum() == total == m60.topic_word_counts.sum()
    assert not np.array_equal(m30.topic_word_counts, m60.topic_word_counts)
