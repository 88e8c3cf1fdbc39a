"""Tests for the synthetic corpus generator."""

import numpy as np
import pytest

from narrascope.corpus import PreprocessConfig, build_corpus, tokenize
from narrascope.errors import InfeasibleShare, InvalidSpec
from narrascope.synthgen import (
    SynthSpec,
    generate,
    inject_trend,
    ramp_rate,
    stationary_spec,
    term_names,
)

NO_PRUNING = PreprocessConfig(min_df=1, max_df=1.0)


def _spec(**kwargs) -> SynthSpec:
    params = {
        "n_topics": 3,
        "vocab_size": 40,
        "docs_per_period": 5,
        "n_periods": 4,
        "doc_length": 20,
        "seed": 1,
    }
    params.update(kwargs)
    return stationary_spec(**params)


class TestTermNames:
    def test_fixed_width_and_distinct(self):
        names = term_names(700)
        assert len(set(names)) == 700
        assert {len(n) for n in names} == {5}
        assert term_names(200)[:3] == ["wqaa", "wqab", "wqac"]
        assert term_names(26)[-1] == "wqz"

    def test_survive_tokenizer(self):
        names = term_names(200)
        assert tokenize(" ".join(names), PreprocessConfig()) == names


class TestGenerate:
    def test_single_topic(self):
        docs, truth = generate(_spec(n_topics=1))
        assert np.array_equal(truth.theta, np.ones((len(docs), 1)))
        assert truth.beta.shape == (1, 40)

    @pytest.mark.parametrize("seed", range(8))
    def test_single_topic_share_is_exactly_one(self, seed):
        _, truth = generate(_spec(n_topics=1, docs_per_period=10, seed=seed))
        assert set(truth.theta.ravel().tolist()) == {1.0}

    def test_shapes_and_ids(self):
        docs, truth = generate(_spec(start_period=1990))
        assert len(docs) == 20
        assert truth.theta.shape == (20, 3)
        assert truth.periods == (1990, 1991, 1992, 1993)
        assert docs[0].id == "synth-1990-0000"
        assert [d.period for d in docs[:6]] == [1990] * 5 + [1991]
        assert np.allclose(truth.beta.sum(axis=1), 1.0)
        assert np.allclose(truth.theta.sum(axis=1), 1.0)

    def test_round_trip_token_totals(self):
        docs, truth = generate(_spec(doc_length=(5, 30)))
        _, matrix, dropped = build_corpus(docs, NO_PRUNING)
        assert dropped == []
        assert matrix.doc_lengths.tolist() == list(truth.doc_lengths)
        assert all(5 <= n <= 30 for n in truth.doc_lengths)

    def test_deterministic(self):
        a_docs, a_truth = generate(_spec(seed=99))
        b_docs, b_truth = generate(_spec(seed=99))
        assert a_docs == b_docs
        assert np.array_equal(a_truth.beta, b_truth.beta)
        assert np.array_equal(a_truth.theta, b_truth.theta)

    def test_seed_matters(self):
        a_docs, _ = generate(_spec(seed=1))
        b_docs, _ = generate(_spec(seed=2))
        assert a_docs != b_docs

    def test_documents_independent_of_period_count(self):
        short, _ = generate(_spec(n_periods=2))
        long, _ = generate(_spec(n_periods=4))
        assert short == long[:10]

    def test_planted_beta(self):
        beta = np.zeros((2, 40))
        beta[0, :20] = 1 / 20
        beta[1, 20:] = 1 / 20
        spec = SynthSpec(
            n_topics=2,
            vocab_size=40,
            docs_per_period=3,
            alpha_profile=np.full((2, 2), 0.5),
            doc_length=10,
            beta=beta,
        )
        _, truth = generate(spec)
        assert np.array_equal(truth.beta, beta)

    def test_dirichlet_mean(self):
        alpha = np.array([[0.5, 1.0, 2.5]])
        spec = SynthSpec(
            n_topics=3,
            vocab_size=10,
            docs_per_period=4000,
            alpha_profile=alpha,
            doc_length=1,
            seed=5,
        )
        _, truth = generate(spec)
        mean = truth.theta.mean(axis=0)
        a0 = alpha.sum()
        expected = alpha[0] / a0
        sd = np.sqrt(expected * (1 - expected) / (a0 + 1))
        assert np.all(np.abs(mean - expected) < 3 * sd / np.sqrt(4000))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_topics": 0},
            {"vocab_size": 0},
            {"docs_per_period": 0},
            {"eta": 0.0},
            {"doc_length": 0},
            {"doc_length": (10, 5)},
            {"alpha": -1.0},
        ],
    )
    def test_invalid_spec(self, kwargs):
        with pytest.raises(InvalidSpec):
            _spec(**kwargs)

    def test_planted_beta_must_be_normalized(self):
        spec = SynthSpec(
            n_topics=1,
            vocab_size=2,
            docs_per_period=1,
            alpha_profile=np.ones((1, 1)),
            beta=np.array([[0.7, 0.7]]),
        )
        with pytest.raises(InvalidSpec):
            generate(spec)


class TestInjectTrend:
    def test_flat_trajectory(self):
        spec = _spec(n_topics=4, alpha=1.0)
        flat = inject_trend(spec, 2, 0.25, 0.25)
        assert np.allclose(flat.alpha_profile, spec.alpha_profile)

    def test_linear_ramp(self):
        spec = _spec(n_topics=5, n_periods=40, alpha=1.0)
        ramped = inject_trend(spec, 0, 0.05, 0.30)
        means = ramped.alpha_profile / ramped.alpha_profile.sum(axis=1, keepdims=True)
        assert means[0, 0] == pytest.approx(0.05)
        assert means[-1, 0] == pytest.approx(0.30)
        assert means[19, 0] == pytest.approx(0.05 + 19 / 39 * 0.25, abs=1e-12)
        assert np.allclose(np.diff(means[:, 0]), ramp_rate(0.05, 0.30, 40))

    def test_total_concentration_preserved(self):
        spec = _spec(n_topics=5, n_periods=40, alpha=1.0)
        ramped = inject_trend(spec, 0, 0.05, 0.30)
        assert np.allclose(ramped.alpha_profile.sum(axis=1), 5.0)
        others = ramped.alpha_profile[:, 1:]
        assert np.allclose(others, others[:, :1])

    def test_hump(self):
        spec = _spec(n_periods=21)
        hump = inject_trend(spec, 1, 0.1, 0.5, shape="hump")
        share = hump.alpha_profile[:, 1] / hump.alpha_profile.sum(axis=1)
        assert int(np.argmax(share)) == 10
        assert share[10] == pytest.approx(0.5)
        assert share[0] == pytest.approx(0.1)
        assert share[-1] == pytest.approx(0.1)
        assert np.all(np.diff(share[:11]) > 0)
        assert np.all(np.diff(share[10:]) < 0)

    def test_shortest_hump(self):
        hump = inject_trend(_spec(n_periods=3), 0, 0.1, 0.5, shape="hump")
        share = hump.alpha_profile[:, 0] / hump.alpha_profile.sum(axis=1)
        assert share == pytest.approx([0.1, 0.5, 0.1])

    @pytest.mark.parametrize("n_periods", [1, 2])
    def test_hump_needs_three_periods(self, n_periods):
        with pytest.raises(InvalidSpec, match="3 periods"):
            inject_trend(_spec(n_periods=n_periods), 0, 0.1, 0.5, shape="hump")

    @pytest.mark.parametrize("start,end", [(0.0, 0.3), (0.1, 1.0), (-0.1, 0.2)])
    def test_infeasible_shares(self, start, end):
        with pytest.raises(InfeasibleShare):
            inject_trend(_spec(), 0, start, end)

    def test_single_topic_infeasible(self):
        with pytest.raises(InfeasibleShare):
            inject_trend(_spec(n_topics=1), 0, 0.2, 0.4)

    def test_bad_topic_or_shape(self):
        with pytest.raises(InvalidSpec):
            inject_trend(_spec(), 5, 0.2, 0.4)
        with pytest.raises(InvalidSpec):
            inject_trend(_spec(), 0, 0.2, 0.4, shape="step")

    def test_generated_theta_tracks_ramp(self):
        spec = _spec(n_topics=4, vocab_size=20, docs_per_period=400, n_periods=5, doc_length=1, alpha=2.0)
        ramped = inject_trend(spec, 0, 0.05, 0.30)
        docs, truth = generate(ramped)
        periods = np.array(truth.doc_periods)
        expected = truth.expected_prevalence[:, 0]
        a0 = ramped.alpha_profile.sum(axis=1)
        for t, period in enumerate(truth.periods):
            rows = truth.theta[periods == period, 0]
            se = np.sqrt(expected[t] * (1 - expected[t]) / (a0[t] + 1) / rows.shape[0])
            assert abs(rows.mean() - expected[t]) < 3 * se


def test_ramp_rate():
    assert ramp_rate(0.05, 0.30, 40) == pytest.approx(0.25 / 39)
