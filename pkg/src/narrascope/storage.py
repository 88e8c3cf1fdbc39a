"""Reading and writing every file the pipeline exchanges between stages.

All writers go through atomic_write_text: the content lands in a temporary
file next to the target and is moved into place with os.replace, so a
crashed stage never leaves a half-written output behind.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import fields
from pathlib import Path
from typing import Any
from urllib.parse import quote, unquote

import numpy as np
import pandas as pd

from narrascope import BUILD_ID
from narrascope.align import IndicatorSeries, LagPoint, LagResult
from narrascope.corpus import DocTermMatrix, Document, RawDocument, Vocabulary
from narrascope.errors import (
    CorpusFormatError,
    InvalidConfig,
    MissingInput,
    VocabularyMismatch,
)
from narrascope.lda import LdaConfig, LdaModel
from narrascope.synthgen import SynthTruth
from narrascope.trend import SeriesPoint, TopicSeries, TrendResult

SERIES_COLUMNS = ["topic", "period", "value", "n_docs"]
INDICATOR_COLUMNS = ["name", "year", "count"]


def atomic_write_text(path: str | Path, content: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_json(path: str | Path, data: Any, indent: int | None = 2) -> Path:
    text = json.dumps(data, indent=indent, sort_keys=True, ensure_ascii=False)
    return atomic_write_text(path, text + "\n")


def read_json(path: str | Path, what: str = "JSON file") -> Any:
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, what)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from exc
    except UnicodeDecodeError as exc:
        raise InvalidConfig(f"{path}: not valid UTF-8") from exc


def _write_csv(path: str | Path, frame: pd.DataFrame) -> Path:
    buf = io.StringIO()
    frame.to_csv(buf, index=False, lineterminator="\n")
    return atomic_write_text(path, buf.getvalue())


def _read_csv(path: str | Path, what: str, columns: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, what)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InvalidConfig(f"{path}: unreadable CSV ({exc})") from exc
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise InvalidConfig(f"{path}: missing column(s) {', '.join(missing)}")
    return frame


def _reject_rows(path: str | Path, bad: pd.Series, reason: str) -> None:
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0]) + 1
        raise InvalidConfig(f"{path}, data row {row}: {reason}")


# ── Corpus ──


def read_corpus(path: str | Path) -> list[RawDocument]:
    """Parse a JSON-Lines corpus: one {"id", "year", "text"} object per line.

    Blank lines are skipped. Any other defect raises CorpusFormatError with
    the 1-based line number.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, "corpus file")

    docs: list[RawDocument] = []
    with open(path, "rb") as f:
        for lineno, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusFormatError(path, lineno, f"invalid UTF-8 at byte {exc.start}") from exc
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(path, lineno, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError(path, lineno, "expected a JSON object")
            doc_id, year, text = obj.get("id"), obj.get("year"), obj.get("text")
            if not isinstance(doc_id, str) or not doc_id:
                raise CorpusFormatError(path, lineno, "'id' must be a non-empty string")
            if isinstance(year, bool) or not isinstance(year, int):
                raise CorpusFormatError(path, lineno, "'year' must be an integer")
            if not isinstance(text, str):
                raise CorpusFormatError(path, lineno, "'text' must be a string")
            docs.append(RawDocument(id=doc_id, period=year, text=text))
    return docs


def write_corpus(path: str | Path, docs: Iterable[RawDocument]) -> Path:
    lines = [
        json.dumps({"id": d.id, "year": d.period, "text": d.text}, ensure_ascii=False)
        for d in docs
    ]
    return atomic_write_text(path, "".join(line + "\n" for line in lines))


def read_term_list(path: str | Path) -> frozenset[str]:
    """One term per line; '#' starts a comment; terms are lowercased."""
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, "term list")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidConfig(f"{path}: not valid UTF-8") from exc
    terms = set()
    for line in text.splitlines():
        term = line.split("#", 1)[0].strip().lower()
        if term:
            terms.add(term)
    return frozenset(terms)


# ── Vocabulary and matrix ──


def write_vocabulary(path: str | Path, vocabulary: Vocabulary) -> Path:
    return atomic_write_text(path, "".join(t + "\n" for t in vocabulary.terms))


def read_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, "vocabulary file")
    terms = [t for t in path.read_text(encoding="utf-8").split("\n") if t]
    return Vocabulary(tuple(terms))


def write_matrix(path: str | Path, matrix: DocTermMatrix) -> Path:
    """Sparse text format.

    Header "V D"; then one line per document:
    "<id> <year> <nnz> <index>:<count> ...", indices ascending. Ids are
    percent-encoded so they never contain whitespace.
    """
    counts = matrix.counts
    lines = [f"{matrix.V} {matrix.D}"]
    for d, doc in enumerate(matrix.docs):
        start, end = counts.indptr[d], counts.indptr[d + 1]
        pairs = " ".join(
            f"{int(v)}:{int(c)}"
            for v, c in zip(counts.indices[start:end], counts.data[start:end])
        )
        lines.append(f"{quote(doc.id, safe='')} {doc.period} {end - start} {pairs}".rstrip())
    return atomic_write_text(path, "\n".join(lines) + "\n")


def _entry(field: str) -> tuple[int, int]:
    index, count = field.split(":")
    return int(index), int(count)


def read_matrix(path: str | Path, vocabulary: Vocabulary) -> DocTermMatrix:
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, "matrix file")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CorpusFormatError(path, 1, "empty matrix file")
    try:
        n_terms, n_docs = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise CorpusFormatError(path, 1, "header must be 'V D'") from exc
    if n_terms != len(vocabulary):
        raise VocabularyMismatch(
            f"{path}: matrix has V={n_terms}, vocabulary has {len(vocabulary)} terms"
        )

    docs: list[Document] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        try:
            doc_id, year, nnz = unquote(parts[0]), int(parts[1]), int(parts[2])
            pairs = [_entry(p) for p in parts[3:]]
        except (IndexError, ValueError) as exc:
            raise CorpusFormatError(path, lineno, "expected 'id year nnz index:count ...'") from exc
        if len(pairs) != nnz:
            raise CorpusFormatError(path, lineno, f"nnz={nnz} but {len(pairs)} pairs")
        tokens: list[int] = []
        for v, c in pairs:
            if not 0 <= v < n_terms or c < 1:
                raise CorpusFormatError(path, lineno, f"bad entry {v}:{c}")
            tokens.extend([v] * c)
        docs.append(Document(id=doc_id, period=year, tokens=tuple(tokens)))

    if len(docs) != n_docs:
        raise CorpusFormatError(path, len(lines), f"header says D={n_docs}, found {len(docs)}")
    return DocTermMatrix.from_documents(docs, vocabulary)


# ── Model ──


def save_model(path: str | Path, model: LdaModel) -> Path:
    """Model as one JSON document; floats keep their shortest round-trip repr."""
    c = model.config
    data = {
        "build": BUILD_ID,
        "config": {
            "n_topics": c.n_topics,
            "alpha": float(c.alpha),
            "eta": c.eta,
            "burn_in": c.burn_in,
            "samples": c.samples,
            "thin": c.thin,
            "seed": c.seed,
        },
        "vocabulary_hash": model.vocabulary.digest(),
        "doc_ids": list(model.doc_ids),
        "sweeps": model.sweeps,
        "log_likelihood": [float(x) for x in model.log_likelihood],
        "theta": model.theta_hat.tolist(),
        "beta": model.beta_hat.tolist(),
    }
    return write_json(path, data, indent=None)


def load_model(path: str | Path, vocabulary: Vocabulary) -> LdaModel:
    data = read_json(path, "model file")
    if data.get("vocabulary_hash") != vocabulary.digest():
        raise VocabularyMismatch(
            f"{path}: model was fitted on a different vocabulary; re-run ingest and fit"
        )
    try:
        config = LdaConfig(**data["config"])
        theta = np.asarray(data["theta"], dtype=np.float64)
        beta = np.asarray(data["beta"], dtype=np.float64)
        doc_ids = tuple(data["doc_ids"])
        sweeps = int(data["sweeps"])
        trace = tuple(float(x) for x in data.get("log_likelihood", []))
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"{path}: malformed model file ({exc})") from exc
    if beta.shape != (config.n_topics, len(vocabulary)) or theta.shape != (
        len(doc_ids),
        config.n_topics,
    ):
        raise InvalidConfig(f"{path}: array shapes disagree with the model config")
    return LdaModel(
        config=config,
        theta_hat=theta,
        beta_hat=beta,
        vocabulary=vocabulary,
        doc_ids=doc_ids,
        sweeps=sweeps,
        log_likelihood=trace,
    )


# ── Series and indicators ──


def write_series(path: str | Path, series: Sequence[TopicSeries]) -> Path:
    rows = [
        (s.topic, p.period, p.value, p.n_docs) for s in series for p in s.points
    ]
    return _write_csv(path, pd.DataFrame(rows, columns=SERIES_COLUMNS))


def read_series(path: str | Path) -> list[TopicSeries]:
    frame = _read_csv(path, "series file", SERIES_COLUMNS)
    numeric = {
        c: pd.to_numeric(frame[c], errors="coerce").astype(np.float64) for c in SERIES_COLUMNS
    }
    for c in ("topic", "period", "n_docs"):
        col = numeric[c]
        _reject_rows(path, ~np.isfinite(col) | (col != np.floor(col)), f"{c} must be an integer")
    value, n_docs = numeric["value"], numeric["n_docs"]
    _reject_rows(path, ~((value >= 0) & (value <= 1)), "value must lie in [0, 1]")
    _reject_rows(path, n_docs < 1, "n_docs must be >= 1")
    out = []
    for topic, group in frame.sort_values(["topic", "period"]).groupby("topic", sort=True):
        points = tuple(
            SeriesPoint(period=int(r.period), value=float(r.value), n_docs=int(r.n_docs))
            for r in group.itertuples(index=False)
        )
        out.append(TopicSeries(topic=int(topic), points=points))
    return out


def read_indicators(path: str | Path) -> list[IndicatorSeries]:
    """CSV with columns name,year,count; several indicators may share a file."""
    frame = _read_csv(path, "indicator file", INDICATOR_COLUMNS)
    years = pd.to_numeric(frame["year"], errors="coerce").astype(np.float64)
    counts = pd.to_numeric(frame["count"], errors="coerce").astype(np.float64)
    _reject_rows(path, frame["name"].isna(), "missing indicator name")
    _reject_rows(path, ~np.isfinite(years) | (years != np.floor(years)), "year must be an integer")
    _reject_rows(path, ~np.isfinite(counts) | (counts < 0), "count must be a finite number >= 0")
    frame["name"] = frame["name"].astype(str)
    frame["year"] = years.astype(np.int64)
    frame["count"] = counts
    dupes = frame.duplicated(subset=["name", "year"])
    if dupes.any():
        row = frame[dupes].iloc[0]
        raise InvalidConfig(f"{path}: duplicate year {row['year']} for indicator {row['name']!r}")
    out = []
    for name, group in frame.sort_values(["name", "year"]).groupby("name", sort=True):
        points = tuple((int(y), float(c)) for y, c in zip(group["year"], group["count"]))
        out.append(IndicatorSeries(name=str(name), points=points))
    return out


def write_indicators(path: str | Path, indicators: Sequence[IndicatorSeries]) -> Path:
    rows = [(ind.name, t, v) for ind in indicators for t, v in ind.points]
    return _write_csv(path, pd.DataFrame(rows, columns=INDICATOR_COLUMNS))


def write_frame(path: str | Path, frame: pd.DataFrame) -> Path:
    return _write_csv(path, frame)


# ── Synthetic truth ──


def write_truth(path: str | Path, truth: SynthTruth) -> Path:
    data = {
        "terms": list(truth.terms),
        "beta": truth.beta.tolist(),
        "alpha_profile": truth.alpha_profile.tolist(),
        "periods": list(truth.periods),
        "doc_ids": list(truth.doc_ids),
        "doc_periods": list(truth.doc_periods),
        "doc_lengths": list(truth.doc_lengths),
        "theta": truth.theta.tolist(),
    }
    return write_json(path, data, indent=None)


def read_truth(path: str | Path) -> SynthTruth:
    data = read_json(path, "truth file")
    try:
        return SynthTruth(
            terms=tuple(data["terms"]),
            beta=np.asarray(data["beta"], dtype=np.float64),
            theta=np.asarray(data["theta"], dtype=np.float64),
            doc_ids=tuple(data["doc_ids"]),
            doc_periods=tuple(int(t) for t in data["doc_periods"]),
            periods=tuple(int(t) for t in data["periods"]),
            alpha_profile=np.asarray(data["alpha_profile"], dtype=np.float64),
            doc_lengths=tuple(int(n) for n in data.get("doc_lengths", [])),
        )
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"{path}: malformed truth file ({exc})") from exc


# ── Stage results ──


def write_trend(
    path: str | Path,
    results: Sequence[TrendResult],
    adjusted: Mapping[int, float],
    flagged: Sequence[int],
) -> Path:
    rows = [
        {**r.to_dict(), "p_adjusted": adjusted[r.topic], "emerging": r.topic in flagged}
        for r in results
    ]
    return write_json(path, rows)


def read_trend(path: str | Path) -> list[TrendResult]:
    rows = read_json(path, "trend results")
    names = [f.name for f in fields(TrendResult)]
    try:
        return [TrendResult(**{n: row[n] for n in names}) for row in rows]
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"{path}: malformed trend results ({exc})") from exc


def write_alignment(path: str | Path, alignment: Sequence[tuple[LagResult, str]]) -> Path:
    return write_json(path, [{**r.to_dict(), "pattern": pattern} for r, pattern in alignment])


def read_alignment(path: str | Path) -> list[tuple[LagResult, str]]:
    rows = read_json(path, "alignment results")
    out = []
    try:
        for row in rows:
            result = LagResult(
                topic=int(row["topic"]),
                indicator=str(row["indicator"]),
                profile=tuple(
                    LagPoint(lag=int(p["lag"]), r=float(p["r"]), n=int(p["n"]))
                    for p in row["profile"]
                ),
                best_lag=int(row["best_lag"]),
                max_corr=float(row["max_corr"]),
                corr_at_zero=row["corr_at_zero"],
                all_negative=bool(row["all_negative"]),
                notes=tuple(row.get("notes", ())),
            )
            out.append((result, str(row["pattern"])))
    except (KeyError, TypeError) as exc:
        raise InvalidConfig(f"{path}: malformed alignment results ({exc})") from exc
    return out
