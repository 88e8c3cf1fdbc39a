"""Tests for topic-recovery metrics."""

import numpy as np
import pytest

from narrascope.corpus import Vocabulary
from narrascope.errors import VocabularyMismatch
from narrascope.recovery import evaluate, match_topics, top_word_overlap, truth_in_vocabulary
from narrascope.synthgen import generate, stationary_spec


def test_match_identity_permutation():
    rng = np.random.default_rng(0)
    beta = rng.dirichlet(np.full(30, 0.05), size=4)
    shuffled = beta[[2, 0, 3, 1]]
    pairs = match_topics(shuffled, beta)
    assert [(i, j) for i, j, _ in pairs] == [(1, 0), (3, 1), (0, 2), (2, 3)]
    assert all(c == pytest.approx(1.0) for _, _, c in pairs)


def test_match_is_greedy_one_to_one():
    est = np.array([[0.9, 0.1, 0.0], [0.8, 0.2, 0.0]])
    true = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.5]])
    pairs = match_topics(est, true)
    assert sorted(i for i, _, _ in pairs) == [0, 1]
    assert pairs[0][:2] == (0, 0)


def test_top_word_overlap():
    a = np.array([0.4, 0.3, 0.2, 0.1, 0.0])
    b = np.array([0.0, 0.3, 0.4, 0.1, 0.2])
    assert top_word_overlap(a, b, 2) == 1
    assert top_word_overlap(a, a, 3) == 3


def test_truth_in_vocabulary_reorders_and_renormalizes():
    docs, truth = generate(stationary_spec(2, 30, 5, 3, doc_length=15, eta=1.0, seed=4))
    vocab = Vocabulary(tuple(reversed(truth.terms[:10])))
    beta = truth_in_vocabulary(truth, vocab)
    assert beta.shape == (2, 10)
    assert np.allclose(beta.sum(axis=1), 1.0)
    ratio = beta[0, 0] / beta[0, 1]
    assert ratio == pytest.approx(truth.beta[0, 9] / truth.beta[0, 8])


def test_truth_in_vocabulary_rejects_foreign_terms():
    _, truth = generate(stationary_spec(2, 30, 2, 2, doc_length=5))
    with pytest.raises(VocabularyMismatch):
        truth_in_vocabulary(truth, Vocabulary(("inflation",)))


def test_evaluate_on_truth_itself():
    _, truth = generate(stationary_spec(3, 40, 2, 2, doc_length=5, seed=8))
    vocab = Vocabulary(truth.terms)
    report = evaluate(truth.beta[[1, 2, 0]], truth, vocab, top_n=10)
    assert report.mean_cosine == pytest.approx(1.0)
    assert report.min_overlap == 10
    assert report.passes()
    assert [m.estimated for m in report.matches] == [2, 0, 1]
