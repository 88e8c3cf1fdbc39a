"""Tests for the collapsed Gibbs sampler and the fitted model."""

import itertools
import math
from collections import Counter

import numpy as np
import pytest

from narrascope.corpus import DocTermMatrix, Document, Vocabulary
from narrascope.errors import IndexOutOfRange, InvalidConfig, InvariantViolation
from narrascope.lda import (
    GibbsSampler,
    LdaConfig,
    LdaModel,
    fit,
    gibbs_sweep,
    init_state,
    log_joint,
    top_words,
    topic_table,
)


def _matrix(docs: list[list[int]], n_terms: int) -> DocTermMatrix:
    vocab = Vocabulary(tuple(f"t{chr(97 + v)}" for v in range(n_terms)))
    return DocTermMatrix.from_documents(
        [Document(id=f"d{i}", period=2000 + i, tokens=tuple(t)) for i, t in enumerate(docs)],
        vocab,
    )


SMALL = _matrix([[0, 0, 1, 2], [1, 1, 2], [3, 3, 0, 4, 4], [2, 4]], 5)


def _quick(n_topics: int, **kwargs) -> LdaConfig:
    params = {"burn_in": 20, "samples": 5, "thin": 2, "seed": 7, **kwargs}
    return LdaConfig(n_topics=n_topics, **params)


class TestLdaConfig:
    def test_default_alpha(self):
        assert LdaConfig(n_topics=10).alpha == 5.0

    def test_total_sweeps(self):
        assert LdaConfig(n_topics=2, burn_in=100, samples=5, thin=3).total_sweeps == 115

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_topics": 0},
            {"n_topics": 2, "alpha": 0.0},
            {"n_topics": 2, "eta": -1.0},
            {"n_topics": 2, "samples": 0},
            {"n_topics": 2, "thin": 0},
            {"n_topics": 2, "burn_in": -1},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidConfig):
            LdaConfig(**kwargs)


class TestGibbsSweep:
    def test_single_topic_state_unchanged(self):
        config = _quick(1)
        sampler = GibbsSampler(SMALL, config)
        before = sampler.state.n_kv.copy()
        for _ in range(5):
            sampler.sweep()
        assert (sampler.state.z == 0).all()
        assert np.array_equal(sampler.state.n_kv, before)

    def test_counts_conserved_every_sweep(self):
        config = _quick(3)
        rng = np.random.default_rng(1)
        words, docs = SMALL.token_stream()
        state = init_state(words, docs, SMALL.D, SMALL.V, 3, rng)
        for _ in range(25):
            gibbs_sweep(state, SMALL, config, rng)
            state.check(SMALL.doc_lengths)
            assert np.array_equal(state.n_dk.sum(axis=1), SMALL.doc_lengths)

    def test_count_tables_match_assignments(self):
        sampler = GibbsSampler(SMALL, _quick(3))
        for _ in range(10):
            sampler.sweep()
        words, docs = SMALL.token_stream()
        n_kv = np.zeros((3, SMALL.V), dtype=np.int64)
        np.add.at(n_kv, (sampler.state.z, words), 1)
        assert np.array_equal(n_kv, sampler.state.n_kv)
        assert sampler.state.assignments(1).shape[0] == 3

    def test_check_detects_corruption(self):
        sampler = GibbsSampler(SMALL, _quick(2))
        sampler.state.n_k[0] += 1
        with pytest.raises(InvariantViolation):
            sampler.check()

    def test_one_token_conditional_is_uniform(self):
        matrix = _matrix([[0]], 1)
        sampler = GibbsSampler(matrix, LdaConfig(n_topics=2, alpha=1.0, eta=1.0, seed=3))
        hits = 0
        n = 10_000
        for _ in range(n):
            sampler.sweep()
            hits += int(sampler.state.z[0] == 0)
        assert abs(hits / n - 0.5) < 0.02


def _oracle_log_joint(docs, z, n_terms, n_topics, alpha, eta):
    """Collapsed log p(w, z) computed straight from the Dirichlet-multinomial formulas."""
    words = [w for doc in docs for w in sorted(doc)]
    owner = [d for d, doc in enumerate(docs) for _ in doc]
    n_dk = [[0] * n_topics for _ in docs]
    n_kv = [[0] * n_terms for _ in range(n_topics)]
    for w, d, k in zip(words, owner, z):
        n_dk[d][k] += 1
        n_kv[k][w] += 1
    total = 0.0
    for row in n_dk:
        total += math.lgamma(n_topics * alpha) - math.lgamma(sum(row) + n_topics * alpha)
        total += sum(math.lgamma(c + alpha) - math.lgamma(alpha) for c in row)
    for row in n_kv:
        total += math.lgamma(n_terms * eta) - math.lgamma(sum(row) + n_terms * eta)
        total += sum(math.lgamma(c + eta) - math.lgamma(eta) for c in row)
    return total


def _exact_posterior(docs, n_terms, n_topics, alpha, eta):
    """p(z | w) over every assignment of the flat token stream, by enumeration."""
    n_tokens = sum(len(doc) for doc in docs)
    log_p = {
        z: _oracle_log_joint(docs, z, n_terms, n_topics, alpha, eta)
        for z in itertools.product(range(n_topics), repeat=n_tokens)
    }
    top = max(log_p.values())
    weights = {z: math.exp(v - top) for z, v in log_p.items()}
    norm = sum(weights.values())
    return {z: w / norm for z, w in weights.items()}


class TestPosterior:
    def test_log_joint_matches_oracle(self):
        docs = [[0, 1, 2], [2, 2, 1]]
        matrix = _matrix(docs, 3)
        config = LdaConfig(n_topics=2, alpha=1.0, eta=1.0, seed=11)
        sampler = GibbsSampler(matrix, config)
        for _ in range(5):
            sampler.sweep()
            z = tuple(int(k) for k in sampler.state.z)
            expected = _oracle_log_joint(docs, z, 3, 2, 1.0, 1.0)
            assert log_joint(sampler.state, config) == pytest.approx(expected, rel=1e-12)

    def test_label_swap_symmetry(self):
        exact = _exact_posterior([[0, 1, 2], [2, 2, 1]], 3, 2, 1.0, 1.0)
        for z, p in exact.items():
            assert exact[tuple(1 - k for k in z)] == pytest.approx(p, rel=1e-12)

    def test_tiny_instance_matches_exact_posterior(self):
        docs = [[0, 1, 2], [2, 2, 1]]
        matrix = _matrix(docs, 3)
        config = LdaConfig(n_topics=2, alpha=1.0, eta=1.0, seed=2024)
        sampler = GibbsSampler(matrix, config)
        for _ in range(200):
            sampler.sweep()

        n = 50_000
        seen: Counter = Counter()
        for _ in range(n):
            sampler.sweep()
            seen[tuple(int(k) for k in sampler.state.z)] += 1

        exact = _exact_posterior(docs, 3, 2, 1.0, 1.0)
        tv = 0.5 * sum(abs(seen[z] / n - p) for z, p in exact.items())
        assert tv < 0.05


class TestFit:
    def test_single_topic(self):
        config = _quick(1, eta=0.5)
        model = fit(SMALL, config)
        assert np.array_equal(model.theta_hat, np.ones((SMALL.D, 1)))
        counts = np.asarray(SMALL.counts.sum(axis=0)).ravel()
        expected = (counts + 0.5) / (counts.sum() + SMALL.V * 0.5)
        assert np.allclose(model.beta_hat[0], expected, rtol=0, atol=1e-15)

    def test_rows_are_distributions(self):
        model = fit(SMALL, _quick(3))
        assert np.allclose(model.theta_hat.sum(axis=1), 1.0, rtol=0, atol=1e-12)
        assert np.allclose(model.beta_hat.sum(axis=1), 1.0, rtol=0, atol=1e-12)
        assert (model.theta_hat > 0).all()
        assert (model.beta_hat > 0).all()

    def test_deterministic(self):
        a = fit(SMALL, _quick(3))
        b = fit(SMALL, _quick(3))
        assert np.array_equal(a.theta_hat, b.theta_hat)
        assert np.array_equal(a.beta_hat, b.beta_hat)
        assert a.log_likelihood == b.log_likelihood

    def test_seed_changes_chain(self):
        a = fit(SMALL, _quick(3, seed=1))
        b = fit(SMALL, _quick(3, seed=2))
        assert not np.array_equal(a.theta_hat, b.theta_hat)

    def test_provenance(self):
        config = _quick(2)
        model = fit(SMALL, config)
        assert model.sweeps == config.total_sweeps
        assert len(model.log_likelihood) == config.samples
        assert model.doc_ids == ("d0", "d1", "d2", "d3")

    def test_model_is_read_only(self):
        model = fit(SMALL, _quick(2))
        with pytest.raises(ValueError):
            model.theta_hat[0, 0] = 0.5

    def test_empty_matrix_rejected(self):
        with pytest.raises(InvalidConfig):
            fit(_matrix([], 3), _quick(2))


def _model(beta: list[list[float]], terms: tuple[str, ...]) -> LdaModel:
    beta = np.array(beta)
    return LdaModel(
        config=LdaConfig(n_topics=beta.shape[0]),
        theta_hat=np.full((1, beta.shape[0]), 1.0 / beta.shape[0]),
        beta_hat=beta,
        vocabulary=Vocabulary(terms),
        doc_ids=("d0",),
        sweeps=1,
    )


class TestTopWords:
    def test_direct_sort(self):
        model = _model([[0.5, 0.3, 0.2]], ("a", "b", "c"))
        assert top_words(model, 0, 2) == [("a", 0.5), ("b", 0.3)]

    def test_ties_by_term_index(self):
        model = _model([[0.2, 0.4, 0.4]], ("a", "b", "c"))
        assert [t for t, _ in top_words(model, 0, 3)] == ["b", "c", "a"]

    def test_full_vocabulary_is_permutation(self):
        model = fit(SMALL, _quick(2))
        words = top_words(model, 1, SMALL.V)
        assert sorted(t for t, _ in words) == sorted(SMALL.vocabulary.terms)
        probs = [p for _, p in words]
        assert all(a >= b for a, b in zip(probs, probs[1:]))

    @pytest.mark.parametrize("k,n", [(-1, 1), (1, 1), (0, 0), (0, 4)])
    def test_out_of_range(self, k, n):
        model = _model([[0.5, 0.3, 0.2]], ("a", "b", "c"))
        with pytest.raises(IndexOutOfRange):
            top_words(model, k, n)

    def test_topic_table_with_labels(self):
        model = _model([[0.5, 0.3, 0.2], [0.1, 0.1, 0.8]], ("a", "b", "c"))
        table = topic_table(model, 2, {1: "Finance: banking fragility"})
        assert table[0]["label"] is None
        assert table[1]["label"] == "Finance: banking fragility"
        assert table[1]["top_words"][0] == {"term": "c", "probability": 0.8}
