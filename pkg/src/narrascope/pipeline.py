"""Pipeline stages.

Each stage reads its inputs from the output directory (or the configured
paths), writes its outputs there and returns the in-memory result. The CLI
subcommands call one stage each; `run_all` calls them in order, so a chained
sequence of subcommands and a single run produce the same files.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

from narrascope import storage
from narrascope.align import (
    IndicatorSeries,
    LagResult,
    classify_pattern,
    lag_correlation,
)
from narrascope.config import PipelineConfig, stage_seed
from narrascope.corpus import DocTermMatrix, RawDocument, Vocabulary, build_corpus
from narrascope.errors import InvalidConfig, NoValidLag
from narrascope.lda import LdaModel, fit, topic_table
from narrascope.recovery import RecoveryReport, evaluate
from narrascope.report import (
    FIGURE_FILES,
    build_report,
    joint_frame,
    lag_profile_frame,
    prevalence_frame,
)
from narrascope.synthgen import SynthTruth, generate, inject_trend, stationary_spec
from narrascope.trend import (
    TopicSeries,
    TrendResult,
    adjust_p_values,
    aggregate,
    analyze,
    detect_emergence,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OutputLayout:
    root: Path

    def __truediv__(self, name: str) -> Path:
        return self.root / name

    @property
    def corpus(self) -> Path:
        return self.root / "corpus.jsonl"

    @property
    def truth(self) -> Path:
        return self.root / "truth.json"

    @property
    def matrix(self) -> Path:
        return self.root / "matrix.txt"

    @property
    def vocabulary(self) -> Path:
        return self.root / "vocab.txt"

    @property
    def model(self) -> Path:
        return self.root / "model.json"

    @property
    def topics(self) -> Path:
        return self.root / "topics.json"

    @property
    def series(self) -> Path:
        return self.root / "series.csv"

    @property
    def trend(self) -> Path:
        return self.root / "trend.json"

    @property
    def align(self) -> Path:
        return self.root / "align.json"

    @property
    def lag_profiles(self) -> Path:
        return self.root / "lag_profiles.csv"

    @property
    def report(self) -> Path:
        return self.root / "report.json"


@dataclass(frozen=True)
class IngestResult:
    vocabulary: Vocabulary
    matrix: DocTermMatrix
    dropped: list[str]


@dataclass(frozen=True)
class FitResult:
    model: LdaModel
    recovery: RecoveryReport | None = None


@dataclass(frozen=True)
class TrendOutcome:
    series: list[TopicSeries]
    results: list[TrendResult]
    adjusted: dict[int, float]
    flagged: list[int]


def layout(config: PipelineConfig) -> OutputLayout:
    return OutputLayout(config.paths.output)


def run_simulate(config: PipelineConfig) -> tuple[list[RawDocument], SynthTruth]:
    """Draw a synthetic corpus from config.simulate; writes corpus.jsonl and truth.json."""
    s = config.simulate
    spec = stationary_spec(
        n_topics=s.topics,
        vocab_size=s.vocab_size,
        docs_per_period=s.docs_per_period,
        n_periods=s.periods,
        doc_length=s.doc_length,
        alpha=s.alpha,
        eta=s.eta,
        start_period=s.start_period,
        seed=stage_seed(config.seed, "simulate"),
    )
    if s.trend:
        spec = inject_trend(
            spec,
            topic=s.trend["topic"],
            start_share=s.trend["start_share"],
            end_share=s.trend["end_share"],
            shape=s.trend.get("shape", "linear"),
        )
    docs, truth = generate(spec)

    out = layout(config)
    storage.write_corpus(out.corpus, docs)
    storage.write_truth(out.truth, truth)
    logger.info("simulated %d documents over %d periods", len(docs), spec.n_periods)
    return docs, truth


def run_ingest(config: PipelineConfig) -> IngestResult:
    """Tokenize and prune the corpus; writes matrix.txt and vocab.txt."""
    out = layout(config)
    corpus_path = config.paths.corpus or out.corpus
    raw = storage.read_corpus(corpus_path)
    vocabulary, matrix, dropped = build_corpus(raw, config.preprocess_config())

    storage.write_vocabulary(out.vocabulary, vocabulary)
    storage.write_matrix(out.matrix, matrix)
    logger.info("ingested %s: D=%d, V=%d, dropped=%d", corpus_path, matrix.D, matrix.V, len(dropped))
    return IngestResult(vocabulary=vocabulary, matrix=matrix, dropped=dropped)


def _load_matrix(out: OutputLayout) -> tuple[Vocabulary, DocTermMatrix]:
    vocabulary = storage.read_vocabulary(out.vocabulary)
    return vocabulary, storage.read_matrix(out.matrix, vocabulary)


def _load_fitted(out: OutputLayout) -> tuple[DocTermMatrix, LdaModel]:
    vocabulary, matrix = _load_matrix(out)
    model = storage.load_model(out.model, vocabulary)
    if model.doc_ids != tuple(matrix.ids):
        raise InvalidConfig(
            f"{out.model} and {out.matrix} disagree on documents; re-run fit"
        )
    return matrix, model


def run_fit(config: PipelineConfig) -> FitResult:
    """Fit LDA to the ingested matrix; writes model.json.

    With paths.truth set, the fitted topics are scored against the planted ones.
    """
    out = layout(config)
    vocabulary, matrix = _load_matrix(out)
    model = fit(matrix, config.lda_config())
    storage.save_model(out.model, model)

    recovery = None
    if config.paths.truth is not None:
        truth = storage.read_truth(config.paths.truth)
        recovery = evaluate(model.beta_hat, truth, vocabulary, top_n=10)
        logger.info(
            "recovery: mean cosine %.3f, min top-10 overlap %d",
            recovery.mean_cosine,
            recovery.min_overlap,
        )
    return FitResult(model=model, recovery=recovery)


def run_topics(config: PipelineConfig) -> list[dict]:
    """Top words per topic with optional labels; writes topics.json."""
    out = layout(config)
    _, model = _load_fitted(out)
    table = topic_table(model, config.topics.top_n, config.topics.labels)
    storage.write_json(out.topics, table)
    return table


def run_trend(config: PipelineConfig) -> TrendOutcome:
    """Per-period prevalence, Mann-Kendall/Sen per topic, emergence flags.

    Writes series.csv and trend.json.
    """
    out = layout(config)
    matrix, model = _load_fitted(out)
    settings = config.trend

    series = aggregate(model, matrix.periods)
    results = [analyze(s, settings.confidence) for s in series]
    adjusted = adjust_p_values(results, settings.correction)
    flagged = detect_emergence(results, settings.alpha, settings.correction)

    storage.write_series(out.series, series)
    storage.write_trend(out.trend, results, adjusted, flagged)
    logger.info("trend: %d of %d topics flagged", len(flagged), len(results))
    return TrendOutcome(series=series, results=results, adjusted=adjusted, flagged=flagged)


def _pairs(
    config: PipelineConfig,
    series: list[TopicSeries],
    indicators: list[IndicatorSeries],
) -> list[tuple[TopicSeries, IndicatorSeries]]:
    by_topic = {s.topic: s for s in series}
    by_name = {ind.name: ind for ind in indicators}
    if not config.align.pairs:
        return [(s, ind) for s in series for ind in indicators]
    pairs = []
    for topic, name in config.align.pairs:
        if topic not in by_topic:
            raise InvalidConfig(f"align pair: no topic {topic} in the fitted model")
        if name not in by_name:
            raise InvalidConfig(f"align pair: indicator {name!r} not in {config.paths.indicators}")
        pairs.append((by_topic[topic], by_name[name]))
    return pairs


def _clear_alignment(out: OutputLayout) -> None:
    out.align.unlink(missing_ok=True)
    out.lag_profiles.unlink(missing_ok=True)


def run_align(config: PipelineConfig) -> list[tuple[LagResult, str]]:
    """Lagged correlation of topic series with indicators; writes align.json and lag_profiles.csv.

    Without an indicator file the stage is skipped and earlier outputs are removed.
    """
    out = layout(config)
    if config.paths.indicators is None:
        logger.info("no indicator file configured; skipping alignment")
        _clear_alignment(out)
        return []

    series = storage.read_series(out.series)
    indicators = storage.read_indicators(config.paths.indicators)
    s = config.align
    explicit = bool(s.pairs)

    alignment: list[tuple[LagResult, str]] = []
    for topic_series, indicator in _pairs(config, series, indicators):
        try:
            result = lag_correlation(topic_series, indicator, s.max_lag, s.min_overlap)
        except NoValidLag:
            if explicit:
                raise
            logger.warning(
                "topic %d vs %r: no valid lag, pair skipped", topic_series.topic, indicator.name
            )
            continue
        alignment.append((result, classify_pattern(result, s.near_window, s.weak_threshold)))

    if not alignment:
        logger.warning("alignment produced no results")
        _clear_alignment(out)
        return []

    storage.write_alignment(out.align, alignment)
    storage.write_frame(
        out.lag_profiles, lag_profile_frame([r for r, _ in alignment]).drop(columns="best")
    )
    return alignment


def run_report(config: PipelineConfig) -> dict:
    """Collect every stage's output into report.json and the figure CSVs."""
    out = layout(config)
    matrix, model = _load_fitted(out)
    series = storage.read_series(out.series)
    results = storage.read_trend(out.trend)
    t = config.trend
    flagged = detect_emergence(results, t.alpha, t.correction)

    alignment: list[tuple[LagResult, str]] = []
    indicators: list[IndicatorSeries] = []
    if config.paths.indicators is not None and out.align.is_file():
        alignment = storage.read_alignment(out.align)
        indicators = storage.read_indicators(config.paths.indicators)

    report = build_report(
        seed=config.seed,
        matrix=matrix,
        model=model,
        topics=topic_table(model, config.topics.top_n, config.topics.labels),
        trend_results=results,
        flagged=flagged,
        trend_settings={"alpha": t.alpha, "correction": t.correction, "confidence": t.confidence},
        alignment=alignment,
        align_settings={"max_lag": config.align.max_lag, "min_overlap": config.align.min_overlap},
    )

    storage.write_frame(out / FIGURE_FILES["prevalence"], prevalence_frame(series, config.topics.labels))
    if alignment:
        lag_results = [r for r, _ in alignment]
        storage.write_frame(out / FIGURE_FILES["joint"], joint_frame(series, indicators, lag_results))
        storage.write_frame(out / FIGURE_FILES["lag_profiles"], lag_profile_frame(lag_results))
    else:
        (out / FIGURE_FILES["joint"]).unlink(missing_ok=True)
        (out / FIGURE_FILES["lag_profiles"]).unlink(missing_ok=True)
    storage.write_json(out.report, report)
    return report


def run_all(config: PipelineConfig, simulate: bool = False) -> dict:
    """Every stage in order. With `simulate`, the corpus is synthesized first
    and the planted truth is used for recovery metrics."""
    if simulate:
        run_simulate(config)
        out = layout(config)
        config = replace(
            config,
            paths=replace(config.paths, corpus=out.corpus, truth=config.paths.truth or out.truth),
        )
    run_ingest(config)
    run_fit(config)
    run_topics(config)
    run_trend(config)
    run_align(config)
    return run_report(config)
