"""How well a fitted model recovers the planted topics of a synthetic corpus."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from narrascope.corpus import Vocabulary
from narrascope.errors import VocabularyMismatch
from narrascope.synthgen import SynthTruth


@dataclass(frozen=True)
class TopicMatch:
    estimated: int
    true: int
    cosine: float
    overlap: int


@dataclass(frozen=True)
class RecoveryReport:
    matches: tuple[TopicMatch, ...]
    top_n: int

    @property
    def mean_cosine(self) -> float:
        return float(np.mean([m.cosine for m in self.matches]))

    @property
    def min_overlap(self) -> int:
        return min(m.overlap for m in self.matches)

    def passes(self, cosine: float = 0.9, overlap: int = 7) -> bool:
        return self.mean_cosine >= cosine and self.min_overlap >= overlap


def truth_in_vocabulary(truth: SynthTruth, vocabulary: Vocabulary) -> np.ndarray:
    """Planted beta restricted to the fitted vocabulary's columns, rows renormalized."""
    index = {t: i for i, t in enumerate(truth.terms)}
    missing = [t for t in vocabulary.terms if t not in index]
    if missing:
        raise VocabularyMismatch(
            f"{len(missing)} fitted term(s) absent from the synthetic truth, e.g. {missing[0]!r}"
        )
    cols = [index[t] for t in vocabulary.terms]
    beta = truth.beta[:, cols]
    return beta / beta.sum(axis=1, keepdims=True)


def _cosines(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    return a @ b.T


def match_topics(beta_hat: np.ndarray, beta_true: np.ndarray) -> list[tuple[int, int, float]]:
    """Greedy one-to-one assignment by cosine similarity.

    The best remaining (estimated, true) pair is taken until one side runs
    out. Returns (estimated, true, cosine) sorted by true topic.
    """
    sims = _cosines(np.asarray(beta_hat, dtype=np.float64), np.asarray(beta_true, dtype=np.float64))
    work = sims.copy()
    pairs: list[tuple[int, int, float]] = []
    for _ in range(min(work.shape)):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        pairs.append((int(i), int(j), float(sims[i, j])))
        work[i, :] = -np.inf
        work[:, j] = -np.inf
    return sorted(pairs, key=lambda p: p[1])


def top_word_overlap(est_row: np.ndarray, true_row: np.ndarray, n: int = 10) -> int:
    """Number of shared terms among the top-n of two word distributions."""
    def top(row: np.ndarray) -> set[int]:
        return set(np.lexsort((np.arange(row.shape[0]), -row))[:n].tolist())

    return len(top(est_row) & top(true_row))


def evaluate(beta_hat: np.ndarray, truth: SynthTruth, vocabulary: Vocabulary, top_n: int = 10) -> RecoveryReport:
    beta_true = truth_in_vocabulary(truth, vocabulary)
    matches = tuple(
        TopicMatch(
            estimated=i,
            true=j,
            cosine=c,
            overlap=top_word_overlap(beta_hat[i], beta_true[j], top_n),
        )
        for i, j, c in match_topics(beta_hat, beta_true)
    )
    return RecoveryReport(matches=matches, top_n=top_n)
