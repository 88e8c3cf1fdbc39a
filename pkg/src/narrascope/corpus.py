"""Corpus ingestion: tokenization, vocabulary construction, document-term matrix.

Tokens are maximal runs of Unicode letters in the lowercased text. Stopwords,
user exclusions and short tokens are removed; no stemming or lemmatisation is
applied, so "institution" and "institutional" stay distinct.
"""

from __future__ import annotations

import hashlib
import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from itertools import groupby

import numpy as np
from scipy import sparse
from sklearn.feature_extraction.text import ENGLISH_STOP_WORDS

from narrascope.errors import AllDocumentsEmpty, DuplicateDocumentId, InvalidConfig

logger = logging.getLogger(__name__)

BUILTIN_STOPWORDS: frozenset[str] = frozenset(ENGLISH_STOP_WORDS)


@dataclass(frozen=True)
class PreprocessConfig:
    stopwords: frozenset[str] = BUILTIN_STOPWORDS
    exclusions: frozenset[str] = frozenset()
    min_length: int = 2
    min_df: int = 5
    max_df: float = 0.5  # fraction of non-empty documents

    def __post_init__(self) -> None:
        if self.min_length < 1:
            raise InvalidConfig("min_length must be >= 1")
        if self.min_df < 1:
            raise InvalidConfig("min_df must be >= 1")
        if not 0 < self.max_df <= 1:
            raise InvalidConfig("max_df must be in (0, 1]")


@dataclass(frozen=True)
class RawDocument:
    id: str
    period: int
    text: str


@dataclass(frozen=True)
class Document:
    id: str
    period: int
    tokens: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})
        if len(self.index) != len(self.terms):
            raise InvalidConfig("vocabulary terms must be distinct")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self.index

    def digest(self) -> str:
        """sha256 over the newline-joined terms; identifies a vocabulary in model files."""
        return hashlib.sha256("\n".join(self.terms).encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class DocTermMatrix:
    docs: tuple[Document, ...]
    vocabulary: Vocabulary
    counts: sparse.csr_matrix

    @classmethod
    def from_documents(
        cls, docs: Sequence[Document], vocabulary: Vocabulary
    ) -> DocTermMatrix:
        rows: list[int] = []
        cols: list[int] = []
        for d, doc in enumerate(docs):
            rows.extend([d] * len(doc.tokens))
            cols.extend(doc.tokens)
        data = np.ones(len(rows), dtype=np.int64)
        counts = sparse.csr_matrix(
            (data, (rows, cols)), shape=(len(docs), len(vocabulary)), dtype=np.int64
        )
        counts.sum_duplicates()
        counts.sort_indices()
        return cls(docs=tuple(docs), vocabulary=vocabulary, counts=counts)

    @property
    def V(self) -> int:
        return len(self.vocabulary)

    @property
    def D(self) -> int:
        return len(self.docs)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.docs]

    @property
    def periods(self) -> np.ndarray:
        return np.array([d.period for d in self.docs], dtype=np.int64)

    @property
    def doc_lengths(self) -> np.ndarray:
        return np.asarray(self.counts.sum(axis=1)).ravel().astype(np.int64)

    def row(self, d: int) -> dict[int, int]:
        """Sparse term-index → count map of one document."""
        start, end = self.counts.indptr[d], self.counts.indptr[d + 1]
        return {
            int(v): int(c)
            for v, c in zip(self.counts.indices[start:end], self.counts.data[start:end])
        }

    def token_stream(self) -> tuple[np.ndarray, np.ndarray]:
        """Bag-of-words expansion: (word index, document index) per token.

        Tokens of a document are laid out in ascending term-index order, so a
        matrix read back from disk yields exactly the same stream.
        """
        words = np.repeat(self.counts.indices, self.counts.data).astype(np.int64)
        docs = np.repeat(
            np.arange(self.D, dtype=np.int64), self.doc_lengths
        )
        return words, docs


def _letter_runs(text: str) -> list[str]:
    # isalpha is false for every numeric character, superscripts included
    return ["".join(run) for is_letter, run in groupby(text, str.isalpha) if is_letter]


def tokenize(text: str, config: PreprocessConfig) -> list[str]:
    """Lowercase, split into alphabetic runs, drop stopwords/exclusions/short tokens."""
    return [
        tok
        for tok in _letter_runs(text.lower())
        if len(tok) >= config.min_length
        and tok not in config.stopwords
        and tok not in config.exclusions
    ]


def _order_terms(freq: Counter[str], keep: Iterable[str]) -> tuple[str, ...]:
    # descending corpus frequency, ties lexicographic
    return tuple(sorted(keep, key=lambda t: (-freq[t], t)))


def build_corpus(
    raw: Sequence[RawDocument], config: PreprocessConfig
) -> tuple[Vocabulary, DocTermMatrix, list[str]]:
    """Tokenize, prune the vocabulary and build the document-term matrix.

    Returns (vocabulary, matrix, dropped ids). Documents left without any
    vocabulary term are dropped with a warning; if nothing survives,
    AllDocumentsEmpty is raised.
    """
    seen: set[str] = set()
    for doc in raw:
        if doc.id in seen:
            raise DuplicateDocumentId(f"duplicate document id: {doc.id!r}")
        seen.add(doc.id)

    tokenized = [tokenize(doc.text, config) for doc in raw]

    freq: Counter[str] = Counter()
    doc_freq: Counter[str] = Counter()
    for tokens in tokenized:
        freq.update(tokens)
        doc_freq.update(set(tokens))

    n_nonempty = sum(1 for tokens in tokenized if tokens)
    max_docs = config.max_df * n_nonempty
    keep = [
        t for t, df in doc_freq.items() if df >= config.min_df and df <= max_docs
    ]
    vocabulary = Vocabulary(_order_terms(freq, keep))

    docs: list[Document] = []
    dropped: list[str] = []
    for doc, tokens in zip(raw, tokenized):
        ids = tuple(vocabulary.index[t] for t in tokens if t in vocabulary.index)
        if ids:
            docs.append(Document(id=doc.id, period=int(doc.period), tokens=ids))
        else:
            dropped.append(doc.id)

    if dropped:
        logger.warning(
            "dropped %d document(s) with no surviving tokens: %s",
            len(dropped),
            ", ".join(dropped[:10]) + (" ..." if len(dropped) > 10 else ""),
        )
    if not docs:
        raise AllDocumentsEmpty(
            f"all {len(raw)} documents are empty after preprocessing and pruning"
        )

    return vocabulary, DocTermMatrix.from_documents(docs, vocabulary), dropped
