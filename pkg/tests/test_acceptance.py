"""Multi-seed acceptance runs on synthetic corpora with planted structure.

Deselected by default; run with `pytest -m slow`.
"""

import numpy as np
import pytest

from narrascope import pipeline
from narrascope.align import TOPIC_LEADS, IndicatorSeries, classify_pattern, lag_correlation
from narrascope.config import from_dict, stage_seed
from narrascope.corpus import PreprocessConfig, build_corpus
from narrascope.lda import LdaConfig, fit
from narrascope.recovery import evaluate
from narrascope.synthgen import generate, inject_trend, ramp_rate, stationary_spec
from narrascope.trend import SeriesPoint, TopicSeries

pytestmark = pytest.mark.slow

SEEDS = range(20)
NO_PRUNING = PreprocessConfig(min_df=1, max_df=1.0)


def test_topic_recovery():
    passed = 0
    for seed in SEEDS:
        spec = stationary_spec(
            n_topics=5, vocab_size=200, docs_per_period=25, n_periods=40,
            doc_length=100, eta=0.05, seed=stage_seed(seed, "simulate"),
        )
        docs, truth = generate(spec)
        vocabulary, matrix, _ = build_corpus(docs, NO_PRUNING)
        model = fit(matrix, LdaConfig(n_topics=5, seed=stage_seed(seed, "fit")))
        report = evaluate(model.beta_hat, truth, vocabulary, top_n=10)
        passed += report.passes(cosine=0.9, overlap=7)
    assert passed >= 18


def _emergence_config(seed: int, output, ramp: bool) -> dict:
    simulate = {
        "topics": 5,
        "vocab_size": 200,
        "docs_per_period": 25,
        "periods": 40,
        "start_period": 1970,
        "doc_length": 100,
        "alpha": 1.0,
        "eta": 0.05,
    }
    if ramp:
        simulate["trend"] = {"topic": 0, "start_share": 0.05, "end_share": 0.30}
    return {
        "seed": seed,
        "paths": {
            "output": str(output),
            "corpus": str(output / "corpus.jsonl"),
            "truth": str(output / "truth.json"),
        },
        "preprocess": {"min_df": 1, "max_df": 1.0},
        "lda": {"topics": 5, "alpha": 1.0},
        "trend": {"alpha": 0.01, "correction": "bonferroni"},
        "simulate": simulate,
    }


def _run_to_trend(config):
    pipeline.run_simulate(config)
    pipeline.run_ingest(config)
    fitted = pipeline.run_fit(config)
    return fitted, pipeline.run_trend(config)


def test_ramped_topic_flagged(tmp_path):
    planted = ramp_rate(0.05, 0.30, 40)
    hits = 0
    for seed in SEEDS:
        config = from_dict(_emergence_config(seed, tmp_path / f"ramp-{seed}", ramp=True))
        fitted, outcome = _run_to_trend(config)
        ramped = fitted.recovery.matches[0]
        assert ramped.true == 0
        result = outcome.results[ramped.estimated]
        hits += (
            outcome.flagged == [ramped.estimated]
            and abs(result.sen_slope - planted) <= 0.25 * planted
        )
    assert hits >= 19


def test_stationary_corpus_not_flagged(tmp_path):
    quiet = 0
    for seed in SEEDS:
        config = from_dict(_emergence_config(seed, tmp_path / f"null-{seed}", ramp=False))
        _, outcome = _run_to_trend(config)
        quiet += outcome.flagged == []
    assert quiet >= 19


def _planted_prevalence(seed: int) -> TopicSeries:
    spec = inject_trend(
        stationary_spec(
            n_topics=4, vocab_size=50, docs_per_period=25, n_periods=40,
            doc_length=1, start_period=1970, seed=seed,
        ),
        topic=0, start_share=0.1, end_share=0.5, shape="hump",
    )
    _, truth = generate(spec)
    periods = np.array(truth.doc_periods)
    return TopicSeries(
        topic=0,
        points=tuple(
            SeriesPoint(t, float(truth.theta[periods == t, 0].mean()), int((periods == t).sum()))
            for t in truth.periods
        ),
    )


def test_lag_recovery():
    hits = 0
    for seed in SEEDS:
        series = _planted_prevalence(seed)
        values = series.values
        rng = np.random.default_rng(seed)
        noisy = values + rng.normal(scale=0.1 * values.std(), size=values.shape[0])
        # C_t = theta_{t-3} + noise
        indicator = IndicatorSeries(
            "citations", tuple((p.period + 3, float(v)) for p, v in zip(series.points, noisy))
        )
        result = lag_correlation(series, indicator, max_lag=10, min_overlap=10)
        hits += result.best_lag == 3 and classify_pattern(result) == TOPIC_LEADS
    assert hits >= 19
