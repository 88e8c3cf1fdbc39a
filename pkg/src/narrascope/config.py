"""Pipeline configuration: defaults < YAML file < command-line flags.

The YAML file is validated against schema.CONFIG_SCHEMA before anything is
read from it. Flag overrides are dotted keys ("lda.topics", "paths.output")
applied on top of the file, then validated again.
"""

from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from narrascope.corpus import BUILTIN_STOPWORDS, PreprocessConfig
from narrascope.errors import InvalidConfig
from narrascope.lda import LdaConfig
from narrascope.schema import load_yaml, validate

STARTER_TEMPLATE = Path(__file__).parent / "templates" / "pipeline.yaml"

_PATH_KEYS = ("corpus", "stopwords", "exclusions", "indicators", "truth", "output")


def stage_seed(seed: int, stage: str) -> int:
    """Derive a stage-specific 64-bit seed from the pipeline seed.

    sha256 of "<seed>:<stage>", first eight bytes big-endian.
    """
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class PathsConfig:
    corpus: Path | None = None
    stopwords: Path | None = None
    exclusions: Path | None = None
    indicators: Path | None = None
    truth: Path | None = None
    output: Path = Path("narrascope-out")


@dataclass
class PreprocessSettings:
    min_length: int = 2
    min_df: int = 5
    max_df: float = 0.5
    use_builtin_stopwords: bool = True


@dataclass
class LdaSettings:
    topics: int = 10
    alpha: float | None = None  # None → 50 / topics
    eta: float = 0.01
    burn_in: int = 1000
    samples: int = 20
    thin: int = 10


@dataclass
class TrendSettings:
    alpha: float = 0.01
    correction: str = "bonferroni"
    confidence: float = 0.95


@dataclass
class AlignSettings:
    max_lag: int = 10
    min_overlap: int = 10
    near_window: int = 2
    weak_threshold: float = 0.3
    pairs: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class TopicSettings:
    top_n: int = 10
    labels: dict[int, str] = field(default_factory=dict)


@dataclass
class SimulateSettings:
    topics: int = 5
    vocab_size: int = 200
    docs_per_period: int = 25
    periods: int = 40
    start_period: int = 1970
    doc_length: int | tuple[int, int] = 100
    alpha: float = 1.0
    eta: float = 0.05
    trend: dict[str, Any] | None = None


@dataclass
class PipelineConfig:
    seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    preprocess: PreprocessSettings = field(default_factory=PreprocessSettings)
    lda: LdaSettings = field(default_factory=LdaSettings)
    trend: TrendSettings = field(default_factory=TrendSettings)
    align: AlignSettings = field(default_factory=AlignSettings)
    topics: TopicSettings = field(default_factory=TopicSettings)
    simulate: SimulateSettings = field(default_factory=SimulateSettings)

    def preprocess_config(self) -> PreprocessConfig:
        """Build the corpus PreprocessConfig, reading stopword/exclusion files."""
        from narrascope.storage import read_term_list

        stopwords: frozenset[str] = (
            BUILTIN_STOPWORDS if self.preprocess.use_builtin_stopwords else frozenset()
        )
        if self.paths.stopwords is not None:
            stopwords = stopwords | read_term_list(self.paths.stopwords)
        exclusions = (
            read_term_list(self.paths.exclusions)
            if self.paths.exclusions is not None
            else frozenset()
        )
        return PreprocessConfig(
            stopwords=stopwords,
            exclusions=exclusions,
            min_length=self.preprocess.min_length,
            min_df=self.preprocess.min_df,
            max_df=self.preprocess.max_df,
        )

    def lda_config(self) -> LdaConfig:
        s = self.lda
        return LdaConfig(
            n_topics=s.topics,
            alpha=s.alpha if s.alpha is not None else 50.0 / s.topics,
            eta=s.eta,
            burn_in=s.burn_in,
            samples=s.samples,
            thin=s.thin,
            seed=stage_seed(self.seed, "fit"),
        )


def _set_dotted(raw: dict[str, Any], key: str, value: Any) -> None:
    node = raw
    *parents, leaf = key.split(".")
    for part in parents:
        child = node.get(part)
        if not isinstance(child, dict):
            child = {}
            node[part] = child
        node = child
    node[leaf] = value


def _normalize_labels(raw: dict[str, Any]) -> None:
    # YAML reads "3: label" with an integer key; the schema matches key strings.
    topics = raw.get("topics")
    if isinstance(topics, dict) and isinstance(topics.get("labels"), dict):
        topics["labels"] = {str(k): v for k, v in topics["labels"].items()}


def _resolve_paths(raw: dict[str, Any], base: Path) -> None:
    paths = raw.get("paths") or {}
    for key in _PATH_KEYS:
        value = paths.get(key)
        if value is not None and not Path(value).is_absolute():
            paths[key] = str(base / value)


def from_dict(raw: dict[str, Any]) -> PipelineConfig:
    """Validate a raw mapping and build a PipelineConfig from it."""
    raw = copy.deepcopy(raw)
    _normalize_labels(raw)
    errors = validate(raw)
    if errors:
        raise InvalidConfig("invalid configuration:\n  " + "\n  ".join(errors))

    paths_raw = raw.get("paths") or {}
    paths = PathsConfig(
        **{k: Path(v) for k, v in paths_raw.items() if v is not None and k != "output"}
    )
    if paths_raw.get("output") is not None:
        paths.output = Path(paths_raw["output"])

    align_raw = dict(raw.get("align") or {})
    pairs = [(int(p["topic"]), str(p["indicator"])) for p in align_raw.pop("pairs", [])]

    topics_raw = dict(raw.get("topics") or {})
    labels = {int(k): v for k, v in (topics_raw.pop("labels", None) or {}).items()}

    simulate_raw = dict(raw.get("simulate") or {})
    if isinstance(simulate_raw.get("doc_length"), list):
        simulate_raw["doc_length"] = tuple(simulate_raw["doc_length"])

    return PipelineConfig(
        seed=int(raw.get("seed", 0)),
        paths=paths,
        preprocess=PreprocessSettings(**(raw.get("preprocess") or {})),
        lda=LdaSettings(**(raw.get("lda") or {})),
        trend=TrendSettings(**(raw.get("trend") or {})),
        align=AlignSettings(pairs=pairs, **align_raw),
        topics=TopicSettings(labels=labels, **topics_raw),
        simulate=SimulateSettings(**simulate_raw),
    )


def load_config(
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> PipelineConfig:
    """Load the pipeline configuration.

    Relative paths inside the file are resolved against the file's directory;
    override paths are taken as given (relative to the working directory).
    Overrides with a None value are ignored, so unset click options pass
    through untouched.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        raw = copy.deepcopy(load_yaml(path))
        _normalize_labels(raw)
        errors = validate(raw)
        if errors:
            raise InvalidConfig(f"invalid configuration {path}:\n  " + "\n  ".join(errors))
        _resolve_paths(raw, Path(path).resolve().parent)

    for key, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(raw, key, value)

    return from_dict(raw)
