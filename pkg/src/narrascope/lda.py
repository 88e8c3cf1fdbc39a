"""LDA by collapsed Gibbs sampling.

One chain per fit. After `burn_in` sweeps, `samples` states are collected
`thin` sweeps apart and the smoothed estimates

    theta_hat[d, k] = mean over samples of (n_dk + alpha) / (N_d + K alpha)
    beta_hat[k, v]  = mean over samples of (n_kv + eta) / (n_k + V eta)

are averaged within that single chain, so label switching between chains can
never mix topics.

Randomness comes from one numpy Generator (PCG64) seeded by LdaConfig.seed
and consumed sequentially: each sweep draws one uniform per token, in
(document, token) order. Results are bit-identical for identical input order,
matrix and seed; permuting documents changes the stream, so permutation
invariance is not claimed.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import gammaln

from narrascope.corpus import DocTermMatrix, Vocabulary
from narrascope.errors import IndexOutOfRange, InvalidConfig, InvariantViolation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LdaConfig:
    n_topics: int
    alpha: float | None = None  # None → 50 / n_topics
    eta: float = 0.01
    burn_in: int = 1000
    samples: int = 20
    thin: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.alpha is None:
            object.__setattr__(self, "alpha", 50.0 / self.n_topics if self.n_topics >= 1 else 0.0)
        problems = []
        if self.n_topics < 1:
            problems.append("n_topics must be >= 1")
        if not self.alpha > 0:
            problems.append("alpha must be > 0")
        if not self.eta > 0:
            problems.append("eta must be > 0")
        if self.burn_in < 0:
            problems.append("burn_in must be >= 0")
        if self.samples < 1:
            problems.append("samples must be >= 1")
        if self.thin < 1:
            problems.append("thin must be >= 1")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be an unsigned 64-bit integer")
        if problems:
            raise InvalidConfig("; ".join(problems))

    @property
    def total_sweeps(self) -> int:
        return self.burn_in + self.samples * self.thin


@dataclass
class GibbsState:
    """Topic assignments of every token plus the three count tables.

    `z` is flat, aligned with DocTermMatrix.token_stream(); the assignments of
    document d are z[offsets[d]:offsets[d + 1]].
    """

    z: np.ndarray
    offsets: np.ndarray
    n_dk: np.ndarray
    n_kv: np.ndarray
    n_k: np.ndarray

    def assignments(self, d: int) -> np.ndarray:
        return self.z[self.offsets[d] : self.offsets[d + 1]]

    def check(self, doc_lengths: np.ndarray) -> None:
        """Raise InvariantViolation if the count tables are inconsistent."""
        if not np.array_equal(self.n_dk.sum(axis=1), doc_lengths):
            raise InvariantViolation("sum_k n_dk[d] != N_d")
        if not np.array_equal(self.n_kv.sum(axis=1), self.n_k):
            raise InvariantViolation("sum_v n_kv[k] != n_k[k]")
        if int(self.n_k.sum()) != int(doc_lengths.sum()):
            raise InvariantViolation("sum_k n_k != total token count")
        if (self.n_dk < 0).any() or (self.n_kv < 0).any():
            raise InvariantViolation("negative count")


@njit(cache=True)
def _sweep_kernel(words, docs, z, n_dk, n_kv, n_k, alpha, eta, v_eta, uniforms):
    n_topics = n_k.shape[0]
    cumulative = np.empty(n_topics)
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        k = z[i]
        n_dk[d, k] -= 1
        n_kv[k, w] -= 1
        n_k[k] -= 1

        total = 0.0
        for j in range(n_topics):
            total += (n_dk[d, j] + alpha) * (n_kv[j, w] + eta) / (n_k[j] + v_eta)
            cumulative[j] = total

        u = uniforms[i] * total
        k = n_topics - 1
        for j in range(n_topics):
            if u < cumulative[j]:
                k = j
                break

        z[i] = k
        n_dk[d, k] += 1
        n_kv[k, w] += 1
        n_k[k] += 1


def init_state(
    words: np.ndarray,
    docs: np.ndarray,
    n_docs: int,
    n_terms: int,
    n_topics: int,
    rng: np.random.Generator,
) -> GibbsState:
    """Uniform random initial assignments and the matching count tables."""
    z = rng.integers(0, n_topics, size=words.shape[0], dtype=np.int64)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kv = np.zeros((n_topics, n_terms), dtype=np.int64)
    np.add.at(n_dk, (docs, z), 1)
    np.add.at(n_kv, (z, words), 1)
    offsets = np.concatenate(([0], np.cumsum(np.bincount(docs, minlength=n_docs))))
    return GibbsState(
        z=z,
        offsets=offsets.astype(np.int64),
        n_dk=n_dk,
        n_kv=n_kv,
        n_k=n_kv.sum(axis=1),
    )


def gibbs_sweep(
    state: GibbsState,
    matrix: DocTermMatrix,
    config: LdaConfig,
    rng: np.random.Generator,
) -> GibbsState:
    """Resample every token's topic once, in (document, token) order.

    The conditional for token i of document d with word w is
    p(z = k) ∝ (n_dk + alpha)(n_kw + eta) / (n_k + V eta), all counts
    excluding token i. Updates `state` in place and returns it.
    """
    words, docs = matrix.token_stream()
    _sweep(state, words, docs, config, matrix.V, rng)
    return state


def _sweep(
    state: GibbsState,
    words: np.ndarray,
    docs: np.ndarray,
    config: LdaConfig,
    n_terms: int,
    rng: np.random.Generator,
) -> None:
    uniforms = rng.random(words.shape[0])
    _sweep_kernel(
        words,
        docs,
        state.z,
        state.n_dk,
        state.n_kv,
        state.n_k,
        float(config.alpha),
        float(config.eta),
        float(n_terms * config.eta),
        uniforms,
    )


def log_joint(state: GibbsState, config: LdaConfig) -> float:
    """Collapsed log p(w, z | alpha, eta) with theta and beta integrated out."""
    n_docs, n_topics = state.n_dk.shape
    n_terms = state.n_kv.shape[1]
    alpha, eta = float(config.alpha), float(config.eta)
    doc_lengths = state.n_dk.sum(axis=1)

    log_pz = (
        n_docs * (gammaln(n_topics * alpha) - n_topics * gammaln(alpha))
        - gammaln(doc_lengths + n_topics * alpha).sum()
        + gammaln(state.n_dk + alpha).sum()
    )
    log_pw = (
        n_topics * (gammaln(n_terms * eta) - n_terms * gammaln(eta))
        - gammaln(state.n_k + n_terms * eta).sum()
        + gammaln(state.n_kv + eta).sum()
    )
    return float(log_pz + log_pw)


class GibbsSampler:
    """A single collapsed Gibbs chain over one document-term matrix."""

    def __init__(
        self,
        matrix: DocTermMatrix,
        config: LdaConfig,
        rng: np.random.Generator | None = None,
    ) -> None:
        if matrix.D == 0 or matrix.V == 0:
            raise InvalidConfig("cannot fit an empty document-term matrix")
        self.matrix = matrix
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.words, self.docs = matrix.token_stream()
        self.doc_lengths = matrix.doc_lengths
        self.state = init_state(
            self.words, self.docs, matrix.D, matrix.V, config.n_topics, self.rng
        )
        self.sweeps = 0

    def sweep(self) -> GibbsState:
        _sweep(self.state, self.words, self.docs, self.config, self.matrix.V, self.rng)
        self.sweeps += 1
        return self.state

    def check(self) -> None:
        self.state.check(self.doc_lengths)

    def theta(self) -> np.ndarray:
        alpha = float(self.config.alpha)
        denom = self.doc_lengths + self.config.n_topics * alpha
        return (self.state.n_dk + alpha) / denom[:, None]

    def beta(self) -> np.ndarray:
        eta = float(self.config.eta)
        denom = self.state.n_k + self.matrix.V * eta
        return (self.state.n_kv + eta) / denom[:, None]

    def log_joint(self) -> float:
        return log_joint(self.state, self.config)


@dataclass(frozen=True, eq=False)
class LdaModel:
    config: LdaConfig
    theta_hat: np.ndarray  # D × K
    beta_hat: np.ndarray  # K × V
    vocabulary: Vocabulary
    doc_ids: tuple[str, ...]
    sweeps: int
    log_likelihood: tuple[float, ...] = field(default_factory=tuple)

    @property
    def n_topics(self) -> int:
        return self.config.n_topics

    def __post_init__(self) -> None:
        self.theta_hat.setflags(write=False)
        self.beta_hat.setflags(write=False)


def fit(matrix: DocTermMatrix, config: LdaConfig) -> LdaModel:
    """Fit LDA to `matrix`; deterministic given config.seed."""
    sampler = GibbsSampler(matrix, config)
    logger.info(
        "fitting K=%d on D=%d, V=%d, %d tokens (%d sweeps)",
        config.n_topics,
        matrix.D,
        matrix.V,
        sampler.words.shape[0],
        config.total_sweeps,
    )

    for _ in range(config.burn_in):
        sampler.sweep()
    sampler.check()
    logger.info("burn-in done after %d sweeps", config.burn_in)

    theta_sum = np.zeros((matrix.D, config.n_topics))
    beta_sum = np.zeros((config.n_topics, matrix.V))
    trace: list[float] = []
    for s in range(config.samples):
        for _ in range(config.thin):
            sampler.sweep()
        sampler.check()
        theta_sum += sampler.theta()
        beta_sum += sampler.beta()
        trace.append(sampler.log_joint())
        logger.debug("sample %d/%d, log joint %.3f", s + 1, config.samples, trace[-1])

    return LdaModel(
        config=config,
        theta_hat=theta_sum / config.samples,
        beta_hat=beta_sum / config.samples,
        vocabulary=matrix.vocabulary,
        doc_ids=tuple(matrix.ids),
        sweeps=sampler.sweeps,
        log_likelihood=tuple(trace),
    )


def top_words(model: LdaModel, k: int, n: int) -> list[tuple[str, float]]:
    """The n most probable terms of topic k, descending; ties by ascending term index."""
    n_topics, n_terms = model.beta_hat.shape
    if not 0 <= k < n_topics:
        raise IndexOutOfRange(f"topic {k} out of range [0, {n_topics})")
    if not 1 <= n <= n_terms:
        raise IndexOutOfRange(f"n={n} out of range [1, {n_terms}]")
    probs = model.beta_hat[k]
    order = np.lexsort((np.arange(n_terms), -probs))[:n]
    return [(model.vocabulary.terms[v], float(probs[v])) for v in order]


def topic_table(
    model: LdaModel, n: int, labels: Mapping[int, str] | None = None
) -> list[dict]:
    """Per-topic rows {topic, label, top_words} for listings and the report."""
    n = min(n, model.beta_hat.shape[1])
    labels = labels or {}
    return [
        {
            "topic": k,
            "label": labels.get(k),
            "top_words": [
                {"term": term, "probability": p} for term, p in top_words(model, k, n)
            ],
        }
        for k in range(model.n_topics)
    ]
