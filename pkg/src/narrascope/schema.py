"""JSON Schema definitions for the pipeline configuration and the emitted report."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import jsonschema
import yaml

from narrascope.errors import InvalidConfig, MissingInput

_POSITIVE_INT = {"type": "integer", "minimum": 1}
_NON_NEGATIVE_INT = {"type": "integer", "minimum": 0}
_PROBABILITY_OPEN = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_NULLABLE_PATH = {"type": ["string", "null"]}

# ── Pipeline configuration ──

_PATHS = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "corpus": _NULLABLE_PATH,
        "stopwords": _NULLABLE_PATH,
        "exclusions": _NULLABLE_PATH,
        "indicators": _NULLABLE_PATH,
        "truth": _NULLABLE_PATH,
        "output": _NULLABLE_PATH,
    },
}

_PREPROCESS = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "min_length": _POSITIVE_INT,
        "min_df": _POSITIVE_INT,
        "max_df": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "use_builtin_stopwords": {"type": "boolean"},
    },
}

_LDA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "topics": _POSITIVE_INT,
        "alpha": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "eta": {"type": "number", "exclusiveMinimum": 0},
        "burn_in": _NON_NEGATIVE_INT,
        "samples": _POSITIVE_INT,
        "thin": _POSITIVE_INT,
    },
}

_TREND = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "alpha": _PROBABILITY_OPEN,
        "correction": {"type": "string", "enum": ["none", "bonferroni"]},
        "confidence": _PROBABILITY_OPEN,
    },
}

_ALIGN_PAIR = {
    "type": "object",
    "required": ["topic", "indicator"],
    "additionalProperties": False,
    "properties": {
        "topic": _NON_NEGATIVE_INT,
        "indicator": {"type": "string", "minLength": 1},
    },
}

_ALIGN = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "max_lag": _NON_NEGATIVE_INT,
        "min_overlap": {"type": "integer", "minimum": 3},
        "near_window": _NON_NEGATIVE_INT,
        "weak_threshold": {"type": "number", "minimum": -1, "maximum": 1},
        "pairs": {"type": "array", "items": _ALIGN_PAIR},
    },
}

_TOPICS = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "top_n": _POSITIVE_INT,
        "labels": {
            "type": "object",
            "patternProperties": {"^[0-9]+$": {"type": "string"}},
            "additionalProperties": False,
        },
    },
}

_SIMULATE_TREND = {
    "type": "object",
    "required": ["topic", "start_share", "end_share"],
    "additionalProperties": False,
    "properties": {
        "topic": _NON_NEGATIVE_INT,
        "start_share": _PROBABILITY_OPEN,
        "end_share": _PROBABILITY_OPEN,
        "shape": {"type": "string", "enum": ["linear", "hump"]},
    },
}

_SIMULATE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "topics": _POSITIVE_INT,
        "vocab_size": {"type": "integer", "minimum": 2},
        "docs_per_period": _POSITIVE_INT,
        "periods": _POSITIVE_INT,
        "start_period": {"type": "integer"},
        "doc_length": {
            "oneOf": [
                _POSITIVE_INT,
                {"type": "array", "items": _POSITIVE_INT, "minItems": 2, "maxItems": 2},
            ]
        },
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "eta": {"type": "number", "exclusiveMinimum": 0},
        "trend": _SIMULATE_TREND,
    },
}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "paths": _PATHS,
        "preprocess": _PREPROCESS,
        "lda": _LDA,
        "trend": _TREND,
        "align": _ALIGN,
        "topics": _TOPICS,
        "simulate": _SIMULATE,
    },
}

# ── Report ──

_TOP_WORD = {
    "type": "object",
    "required": ["term", "probability"],
    "additionalProperties": False,
    "properties": {
        "term": {"type": "string"},
        "probability": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
}

_TREND_ROW = {
    "type": "object",
    "required": ["topic", "tau", "p_value", "sen_slope", "ci_low", "ci_high"],
    "additionalProperties": False,
    "properties": {
        "topic": _NON_NEGATIVE_INT,
        "tau": {"type": "number", "minimum": -1, "maximum": 1},
        "p_value": {"type": "number", "minimum": 0, "maximum": 1},
        "sen_slope": {"type": "number"},
        "ci_low": {"type": "number"},
        "ci_high": {"type": "number"},
    },
}

_ALIGN_ROW = {
    "type": "object",
    "required": ["topic", "indicator", "best_lag", "max_corr", "corr_at_zero", "pattern"],
    "additionalProperties": False,
    "properties": {
        "topic": _NON_NEGATIVE_INT,
        "indicator": {"type": "string"},
        "best_lag": {"type": "integer"},
        "max_corr": {"type": "number", "minimum": -1, "maximum": 1},
        "corr_at_zero": {"type": ["number", "null"], "minimum": -1, "maximum": 1},
        "pattern": {
            "type": "string",
            "enum": [
                "contemporaneous",
                "near-contemporaneous",
                "topic precedes citations",
                "citations precede topic",
                "weak / misaligned",
            ],
        },
    },
}

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["build", "seed", "corpus", "model", "topics", "trend", "figures"],
    "additionalProperties": False,
    "properties": {
        "build": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "corpus": {
            "type": "object",
            "required": ["documents", "vocabulary"],
            "additionalProperties": False,
            "properties": {
                "documents": _POSITIVE_INT,
                "vocabulary": _POSITIVE_INT,
                "periods": {"type": "array", "items": {"type": "integer"}},
            },
        },
        "model": {
            "type": "object",
            "required": ["topics", "alpha", "eta", "sweeps", "vocabulary_hash"],
            "additionalProperties": False,
            "properties": {
                "topics": _POSITIVE_INT,
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "eta": {"type": "number", "exclusiveMinimum": 0},
                "burn_in": _NON_NEGATIVE_INT,
                "samples": _POSITIVE_INT,
                "thin": _POSITIVE_INT,
                "sweeps": _POSITIVE_INT,
                "seed": {"type": "integer", "minimum": 0},
                "vocabulary_hash": {"type": "string"},
                "final_log_likelihood": {"type": "number"},
            },
        },
        "topics": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["topic", "label", "top_words"],
                "additionalProperties": False,
                "properties": {
                    "topic": _NON_NEGATIVE_INT,
                    "label": {"type": ["string", "null"]},
                    "top_words": {"type": "array", "items": _TOP_WORD},
                },
            },
        },
        "trend": {
            "type": "object",
            "required": ["alpha", "correction", "confidence", "table", "flagged"],
            "additionalProperties": False,
            "properties": {
                "alpha": _PROBABILITY_OPEN,
                "correction": {"type": "string", "enum": ["none", "bonferroni"]},
                "confidence": _PROBABILITY_OPEN,
                "table": {"type": "array", "items": _TREND_ROW},
                "flagged": {"type": "array", "items": _NON_NEGATIVE_INT},
            },
        },
        "align": {
            "type": "object",
            "required": ["max_lag", "min_overlap", "table"],
            "additionalProperties": False,
            "properties": {
                "max_lag": _NON_NEGATIVE_INT,
                "min_overlap": {"type": "integer", "minimum": 3},
                "table": {"type": "array", "items": _ALIGN_ROW},
            },
        },
        "figures": {
            "type": "object",
            "additionalProperties": {"type": "string"},
        },
    },
}


def load_yaml(path: str | Path) -> dict[str, Any]:
    """Load and parse a YAML file. An empty file yields an empty mapping."""
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, "configuration file")
    with open(path, encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise InvalidConfig(f"{path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path}: top level must be a mapping")
    return data


def _errors(schema: dict[str, Any], instance: Any) -> list[str]:
    validator = jsonschema.Draft202012Validator(schema)
    messages = []
    for err in sorted(validator.iter_errors(instance), key=str):
        where = "/".join(str(p) for p in err.absolute_path)
        messages.append(f"{where}: {err.message}" if where else err.message)
    return messages


def validate(config: dict[str, Any]) -> list[str]:
    """Validate a pipeline configuration dict.

    Returns a list of validation error messages (empty if valid).
    """
    return _errors(CONFIG_SCHEMA, config)


def validate_report(report: dict[str, Any]) -> list[str]:
    """Validate an assembled report against REPORT_SCHEMA."""
    return _errors(REPORT_SCHEMA, report)
