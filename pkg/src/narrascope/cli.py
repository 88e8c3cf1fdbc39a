"""CLI for narrascope: simulate, ingest, fit, topics, trend, align, report, run."""

from __future__ import annotations

import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from narrascope import BUILD_ID, __version__, pipeline
from narrascope.config import STARTER_TEMPLATE, PipelineConfig, load_config
from narrascope.errors import InvalidConfig, InvariantViolation, NarrascopeError
from narrascope.recovery import RecoveryReport

console = Console()
err_console = Console(stderr=True)


class _Group(click.Group):
    """Maps package exceptions to exit codes: input errors 1, invariant failures 2."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except NarrascopeError as exc:
            console.print(f"[bold red]Error:[/bold red] {escape(str(exc))}", soft_wrap=True)
            ctx.exit(1)
        except InvariantViolation as exc:
            console.print(
                f"[bold red]Internal error:[/bold red] {escape(str(exc))}", soft_wrap=True
            )
            ctx.exit(2)


def _setup_logging(verbose: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )
    logging.getLogger("numba").setLevel(logging.WARNING)


def _common_options(f: Callable) -> Callable:
    options = [
        click.option(
            "--config", "-c", "config_path", type=click.Path(dir_okay=False), default=None,
            help="Pipeline YAML file",
        ),
        click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Master seed"),
        click.option(
            "--output", "-o", type=click.Path(file_okay=False), default=None,
            help="Output directory",
        ),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _load(
    config_path: str | None, seed: int | None, output: str | None, **overrides: Any
) -> PipelineConfig:
    return load_config(config_path, {"seed": seed, "paths.output": output, **overrides})


@click.group(cls=_Group)
@click.version_option(__version__, message=BUILD_ID)
@click.option("--verbose", "-v", count=True, help="-v for progress, -vv for debug output")
def main(verbose: int) -> None:
    """narrascope: narrative emergence in longitudinal text corpora."""
    _setup_logging(verbose)


@main.command()
@click.option(
    "--output", "-o", default="narrascope.yaml", type=click.Path(dir_okay=False),
    help="Where to write the starter config",
)
@click.option("--force", is_flag=True, help="Overwrite an existing file")
def init(output: str, force: bool) -> None:
    """Write a starter pipeline config."""
    out_path = Path(output)
    if out_path.exists() and not force:
        raise InvalidConfig(f"{out_path} already exists (use --force to overwrite)")
    out_path.write_text(STARTER_TEMPLATE.read_text(encoding="utf-8"), encoding="utf-8")
    console.print(f"\n[bold green]✓[/bold green] Created [cyan]{out_path}[/cyan]")
    console.print(f"  Edit the file, then run: [bold]narrascope run -c {out_path}[/bold]")


@main.command()
@_common_options
@click.option("--topics", "-k", type=click.IntRange(1), default=None, help="Planted topics")
@click.option("--periods", type=click.IntRange(1), default=None, help="Number of periods")
@click.option("--docs-per-period", type=click.IntRange(1), default=None)
def simulate(config_path, seed, output, topics, periods, docs_per_period) -> None:
    """Generate a synthetic corpus with known topics and prevalence."""
    config = _load(
        config_path, seed, output,
        **{
            "simulate.topics": topics,
            "simulate.periods": periods,
            "simulate.docs_per_period": docs_per_period,
        },
    )
    docs, truth = pipeline.run_simulate(config)
    out = pipeline.layout(config)
    console.print(
        Panel(
            f"Documents: [bold]{len(docs)}[/bold]\n"
            f"Periods: {truth.periods[0]}–{truth.periods[-1]}\n"
            f"Topics: {truth.beta.shape[0]}, vocabulary: {truth.beta.shape[1]}\n"
            f"Corpus: [cyan]{out.corpus}[/cyan]\n"
            f"Truth: [cyan]{out.truth}[/cyan]",
            title="[bold]Synthetic corpus[/bold]",
        )
    )


@main.command()
@_common_options
@click.option("--corpus", type=click.Path(dir_okay=False), default=None, help="JSONL corpus")
@click.option("--min-df", type=click.IntRange(1), default=None)
@click.option("--max-df", type=click.FloatRange(0, 1, min_open=True), default=None)
@click.option("--min-length", type=click.IntRange(1), default=None)
def ingest(config_path, seed, output, corpus, min_df, max_df, min_length) -> None:
    """Tokenize a corpus into a vocabulary and document-term matrix."""
    config = _load(
        config_path, seed, output,
        **{
            "paths.corpus": corpus,
            "preprocess.min_df": min_df,
            "preprocess.max_df": max_df,
            "preprocess.min_length": min_length,
        },
    )
    result = pipeline.run_ingest(config)
    out = pipeline.layout(config)
    console.print(
        f"[bold green]✓[/bold green] D={result.matrix.D}  V={result.matrix.V}  "
        f"dropped={len(result.dropped)}  → [cyan]{out.matrix}[/cyan]",
        soft_wrap=True,
    )


def _print_recovery(recovery: RecoveryReport) -> None:
    table = Table(title="Topic recovery")
    table.add_column("True", justify="right")
    table.add_column("Fitted", justify="right")
    table.add_column("Cosine", justify="right")
    table.add_column(f"Top-{recovery.top_n} overlap", justify="right")
    for m in recovery.matches:
        table.add_row(str(m.true), str(m.estimated), f"{m.cosine:.3f}", str(m.overlap))
    console.print(table)
    verdict = "[green]pass[/green]" if recovery.passes() else "[yellow]below threshold[/yellow]"
    console.print(
        f"  mean cosine [bold]{recovery.mean_cosine:.3f}[/bold], "
        f"min overlap [bold]{recovery.min_overlap}[/bold] ({verdict})"
    )


@main.command()
@_common_options
@click.option("--topics", "-k", type=click.IntRange(1), default=None, help="Number of topics")
@click.option("--alpha", type=click.FloatRange(0, min_open=True), default=None)
@click.option("--eta", type=click.FloatRange(0, min_open=True), default=None)
@click.option("--burn-in", type=click.IntRange(0), default=None)
@click.option("--samples", type=click.IntRange(1), default=None)
@click.option("--thin", type=click.IntRange(1), default=None)
@click.option(
    "--truth", type=click.Path(dir_okay=False), default=None,
    help="truth.json from simulate; prints recovery metrics",
)
def fit(config_path, seed, output, topics, alpha, eta, burn_in, samples, thin, truth) -> None:
    """Fit LDA by collapsed Gibbs sampling."""
    config = _load(
        config_path, seed, output,
        **{
            "lda.topics": topics,
            "lda.alpha": alpha,
            "lda.eta": eta,
            "lda.burn_in": burn_in,
            "lda.samples": samples,
            "lda.thin": thin,
            "paths.truth": truth,
        },
    )
    result = pipeline.run_fit(config)
    model = result.model
    trace = model.log_likelihood
    console.print(
        Panel(
            f"Topics: [bold]{model.n_topics}[/bold]  "
            f"alpha={model.config.alpha:g}  eta={model.config.eta:g}\n"
            f"Sweeps: {model.sweeps}  "
            f"(burn-in {model.config.burn_in}, {model.config.samples} samples × thin {model.config.thin})\n"
            f"Final log joint: {trace[-1]:.2f}\n"
            f"Model: [cyan]{pipeline.layout(config).model}[/cyan]",
            title="[bold]LDA fit[/bold]",
        )
    )
    if result.recovery is not None:
        _print_recovery(result.recovery)


@main.command()
@_common_options
@click.option("--top-n", type=click.IntRange(1), default=None, help="Words per topic")
def topics(config_path, seed, output, top_n) -> None:
    """List the most probable words of every topic."""
    config = _load(config_path, seed, output, **{"topics.top_n": top_n})
    table = Table(title="Topics")
    table.add_column("#", justify="right", style="bold")
    table.add_column("Label")
    table.add_column("Top words")
    for row in pipeline.run_topics(config):
        words = ", ".join(w["term"] for w in row["top_words"])
        table.add_row(str(row["topic"]), row["label"] or "", words)
    console.print(table)


@main.command()
@_common_options
@click.option("--level", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=None,
              help="Significance level")
@click.option("--correction", type=click.Choice(["none", "bonferroni"]), default=None)
@click.option("--confidence", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=None)
def trend(config_path, seed, output, level, correction, confidence) -> None:
    """Mann-Kendall and Sen's slope on every topic's prevalence series."""
    config = _load(
        config_path, seed, output,
        **{"trend.alpha": level, "trend.correction": correction, "trend.confidence": confidence},
    )
    outcome = pipeline.run_trend(config)
    table = Table(title="Trend tests")
    table.add_column("Topic", justify="right", style="bold")
    table.add_column("tau", justify="right")
    table.add_column("p", justify="right")
    table.add_column("p (adj.)", justify="right")
    table.add_column("Sen slope", justify="right")
    table.add_column(f"{config.trend.confidence:.0%} CI", justify="right")
    for r in outcome.results:
        mark = "[bold green]↑[/bold green] " if r.topic in outcome.flagged else ""
        table.add_row(
            f"{mark}{r.topic}",
            f"{r.tau:.3f}",
            f"{r.p_value:.2e}",
            f"{outcome.adjusted[r.topic]:.2e}",
            f"{r.sen_slope:.2e}",
            f"[{r.ci_low:.2e}, {r.ci_high:.2e}]",
        )
    console.print(table)
    flagged = ", ".join(map(str, outcome.flagged)) or "none"
    console.print(f"  Emerging topics: [bold]{flagged}[/bold]")


@main.command()
@_common_options
@click.option("--indicators", type=click.Path(dir_okay=False), default=None, help="CSV name,year,count")
@click.option("--max-lag", type=click.IntRange(0), default=None)
@click.option("--min-overlap", type=click.IntRange(3), default=None)
def align(config_path, seed, output, indicators, max_lag, min_overlap) -> None:
    """Lagged correlation of topic prevalence with external indicators."""
    config = _load(
        config_path, seed, output,
        **{
            "paths.indicators": indicators,
            "align.max_lag": max_lag,
            "align.min_overlap": min_overlap,
        },
    )
    alignment = pipeline.run_align(config)
    if not alignment:
        console.print("[dim]No alignment computed.[/dim]")
        return
    table = Table(title="Lead-lag alignment")
    table.add_column("Topic", justify="right", style="bold")
    table.add_column("Indicator")
    table.add_column("Best lag", justify="right")
    table.add_column("Max corr", justify="right")
    table.add_column("Corr at 0", justify="right")
    table.add_column("Pattern")
    for r, pattern in alignment:
        at_zero = "–" if r.corr_at_zero is None else f"{r.corr_at_zero:.3f}"
        table.add_row(str(r.topic), r.indicator, str(r.best_lag), f"{r.max_corr:.3f}", at_zero, pattern)
    console.print(table)


def _print_summary(report: dict, out: Path) -> None:
    trend_section = report["trend"]
    lines = [
        f"Build: {report['build']}  seed: {report['seed']}",
        f"Documents: {report['corpus']['documents']}, vocabulary: {report['corpus']['vocabulary']}",
        f"Topics: {report['model']['topics']}, sweeps: {report['model']['sweeps']}",
        f"Emerging topics: [bold]{', '.join(map(str, trend_section['flagged'])) or 'none'}[/bold]",
    ]
    if "align" in report:
        lines.append(f"Aligned pairs: {len(report['align']['table'])}")
    lines.append(f"Report: [cyan]{out}[/cyan]")
    console.print(Panel("\n".join(lines), title="[bold]narrascope report[/bold]"))


@main.command()
@_common_options
@click.option("--indicators", type=click.Path(dir_okay=False), default=None, help="CSV name,year,count")
def report(config_path, seed, output, indicators) -> None:
    """Assemble report.json and the figure data CSVs."""
    config = _load(config_path, seed, output, **{"paths.indicators": indicators})
    result = pipeline.run_report(config)
    _print_summary(result, pipeline.layout(config).report)


@main.command()
@_common_options
@click.option("--simulate", "synthesize", is_flag=True, help="Synthesize the corpus first")
@click.option("--corpus", type=click.Path(dir_okay=False), default=None, help="JSONL corpus")
@click.option("--indicators", type=click.Path(dir_okay=False), default=None, help="CSV name,year,count")
@click.option("--topics", "-k", type=click.IntRange(1), default=None, help="Number of topics")
def run(config_path, seed, output, synthesize, corpus, indicators, topics) -> None:
    """Run every stage in one process."""
    config = _load(
        config_path, seed, output,
        **{"paths.corpus": corpus, "paths.indicators": indicators, "lda.topics": topics},
    )
    result = pipeline.run_all(config, simulate=synthesize)
    _print_summary(result, pipeline.layout(config).report)
