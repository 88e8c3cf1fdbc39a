"""Final report: one JSON document plus plot-ready CSV data per figure."""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence

import pandas as pd

from narrascope import BUILD_ID
from narrascope.align import IndicatorSeries, LagResult
from narrascope.corpus import DocTermMatrix
from narrascope.errors import InvariantViolation
from narrascope.lda import LdaModel
from narrascope.schema import validate_report
from narrascope.trend import TopicSeries, TrendResult

logger = logging.getLogger(__name__)

FIGURE_FILES = {
    "prevalence": "figure_prevalence.csv",
    "joint": "figure_joint.csv",
    "lag_profiles": "figure_lag_profiles.csv",
}

TREND_COLUMNS = ("topic", "tau", "p_value", "sen_slope", "ci_low", "ci_high")


def trend_table(results: Sequence[TrendResult]) -> list[dict]:
    return [{c: getattr(r, c) for c in TREND_COLUMNS} for r in results]


def prevalence_frame(series: Sequence[TopicSeries], labels: Mapping[int, str]) -> pd.DataFrame:
    """Long-format topic prevalence by period, one row per (topic, period)."""
    rows = [
        (s.topic, labels.get(s.topic, ""), p.period, p.value, p.n_docs)
        for s in series
        for p in s.points
    ]
    return pd.DataFrame(rows, columns=["topic", "label", "period", "prevalence", "n_docs"])


def joint_frame(
    series: Sequence[TopicSeries],
    indicators: Sequence[IndicatorSeries],
    results: Sequence[LagResult],
) -> pd.DataFrame:
    """Prevalence and indicator value side by side for every aligned pair."""
    by_topic = {s.topic: {p.period: p.value for p in s.points} for s in series}
    by_name = {ind.name: ind.as_mapping() for ind in indicators}
    rows = []
    for r in results:
        x, y = by_topic[r.topic], by_name[r.indicator]
        for period in sorted(set(x) & set(y)):
            rows.append((r.topic, r.indicator, period, x[period], y[period]))
    return pd.DataFrame(rows, columns=["topic", "indicator", "period", "prevalence", "indicator_value"])


def lag_profile_frame(results: Sequence[LagResult]) -> pd.DataFrame:
    rows = [
        (r.topic, r.indicator, p.lag, p.r, p.n, p.lag == r.best_lag)
        for r in results
        for p in r.profile
    ]
    return pd.DataFrame(rows, columns=["topic", "indicator", "lag", "r", "n", "best"])


def build_report(
    *,
    seed: int,
    matrix: DocTermMatrix,
    model: LdaModel,
    topics: list[dict],
    trend_results: Sequence[TrendResult],
    flagged: Sequence[int],
    trend_settings: Mapping[str, object],
    alignment: Sequence[tuple[LagResult, str]] | None = None,
    align_settings: Mapping[str, int] | None = None,
) -> dict:
    """Assemble the report and check it against REPORT_SCHEMA.

    The align section is present only when at least one pair was aligned.
    A report that fails its own schema is an InvariantViolation.
    """
    c = model.config
    report: dict = {
        "build": BUILD_ID,
        "seed": seed,
        "corpus": {
            "documents": matrix.D,
            "vocabulary": matrix.V,
            "periods": sorted({int(t) for t in matrix.periods}),
        },
        "model": {
            "topics": c.n_topics,
            "alpha": float(c.alpha),
            "eta": c.eta,
            "burn_in": c.burn_in,
            "samples": c.samples,
            "thin": c.thin,
            "sweeps": model.sweeps,
            "seed": c.seed,
            "vocabulary_hash": model.vocabulary.digest(),
        },
        "topics": topics,
        "trend": {
            **trend_settings,
            "table": trend_table(trend_results),
            "flagged": list(flagged),
        },
        "figures": {"prevalence": FIGURE_FILES["prevalence"]},
    }
    if model.log_likelihood:
        report["model"]["final_log_likelihood"] = model.log_likelihood[-1]

    if alignment:
        report["align"] = {
            **(align_settings or {}),
            "table": [
                {
                    "topic": r.topic,
                    "indicator": r.indicator,
                    "best_lag": r.best_lag,
                    "max_corr": r.max_corr,
                    "corr_at_zero": r.corr_at_zero,
                    "pattern": pattern,
                }
                for r, pattern in alignment
            ],
        }
        report["figures"]["joint"] = FIGURE_FILES["joint"]
        report["figures"]["lag_profiles"] = FIGURE_FILES["lag_profiles"]

    errors = validate_report(report)
    if errors:
        raise InvariantViolation("report violates its schema:\n  " + "\n  ".join(errors))
    logger.debug("report validated (%d topics, %d flagged)", c.n_topics, len(flagged))
    return report
