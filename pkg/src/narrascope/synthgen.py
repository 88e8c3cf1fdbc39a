"""Synthetic corpora drawn from the LDA generative process.

Topics are fixed over the whole sample; emergence is planted through a
period-specific Dirichlet parameter on document topic proportions. Each
document gets its own generator substream keyed by (period, document index),
so the corpus does not depend on generation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from narrascope.corpus import RawDocument
from narrascope.errors import InfeasibleShare, InvalidSpec

TERM_PREFIX = "wq"
_LETTERS = "abcdefghijklmnopqrstuvwxyz"

SHAPES = ("linear", "hump")


def term_names(vocab_size: int) -> list[str]:
    """Fixed-width alphabetic term strings "wqaa", "wqab", ...

    Letters only, so the tokenizer passes them through untouched, and the
    "wq" prefix keeps them clear of every English stopword.
    """
    width = 1
    while 26**width < vocab_size:
        width += 1
    names = []
    for v in range(vocab_size):
        digits = []
        for _ in range(width):
            v, r = divmod(v, 26)
            digits.append(_LETTERS[r])
        names.append(TERM_PREFIX + "".join(reversed(digits)))
    return names


@dataclass(frozen=True, eq=False)
class SynthSpec:
    n_topics: int
    vocab_size: int
    docs_per_period: int
    alpha_profile: np.ndarray  # periods × topics
    doc_length: int | tuple[int, int] = 100  # fixed, or inclusive (low, high)
    eta: float = 0.05
    beta: np.ndarray | None = None  # planted topics, n_topics × vocab_size
    start_period: int = 1
    seed: int = 0

    @property
    def n_periods(self) -> int:
        return int(self.alpha_profile.shape[0])

    @property
    def periods(self) -> list[int]:
        return [self.start_period + t for t in range(self.n_periods)]

    def validate(self) -> None:
        if self.n_topics < 1:
            raise InvalidSpec("n_topics must be >= 1")
        if self.vocab_size < 1:
            raise InvalidSpec("vocab_size must be >= 1")
        if self.docs_per_period < 1:
            raise InvalidSpec("docs_per_period must be >= 1")
        profile = np.asarray(self.alpha_profile, dtype=np.float64)
        if profile.ndim != 2 or profile.shape[1] != self.n_topics or profile.shape[0] < 1:
            raise InvalidSpec("alpha_profile must be periods × n_topics")
        if not (profile > 0).all():
            raise InvalidSpec("every Dirichlet parameter must be > 0")
        if not self.eta > 0:
            raise InvalidSpec("eta must be > 0")
        if isinstance(self.doc_length, tuple):
            low, high = self.doc_length
            if not 1 <= low <= high:
                raise InvalidSpec("doc_length range must satisfy 1 <= low <= high")
        elif self.doc_length < 1:
            raise InvalidSpec("doc_length must be >= 1")
        if self.beta is not None:
            beta = np.asarray(self.beta, dtype=np.float64)
            if beta.shape != (self.n_topics, self.vocab_size):
                raise InvalidSpec("planted beta must be n_topics × vocab_size")
            if (beta < 0).any() or not np.allclose(beta.sum(axis=1), 1.0, atol=1e-12):
                raise InvalidSpec("planted beta rows must be probability vectors")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class SynthTruth:
    terms: tuple[str, ...]
    beta: np.ndarray  # K × V
    theta: np.ndarray  # D × K
    doc_ids: tuple[str, ...]
    doc_periods: tuple[int, ...]
    periods: tuple[int, ...]
    alpha_profile: np.ndarray  # T × K
    doc_lengths: tuple[int, ...] = field(default_factory=tuple)

    @property
    def expected_prevalence(self) -> np.ndarray:
        """E[theta_bar_{k,t}] = alpha_{t,k} / sum_j alpha_{t,j}."""
        return self.alpha_profile / self.alpha_profile.sum(axis=1, keepdims=True)


def stationary_spec(
    n_topics: int,
    vocab_size: int,
    docs_per_period: int,
    n_periods: int,
    doc_length: int | tuple[int, int] = 100,
    alpha: float = 1.0,
    eta: float = 0.05,
    start_period: int = 1,
    seed: int = 0,
) -> SynthSpec:
    """Null model: the same symmetric Dirichlet(alpha) in every period."""
    spec = SynthSpec(
        n_topics=n_topics,
        vocab_size=vocab_size,
        docs_per_period=docs_per_period,
        alpha_profile=np.full((n_periods, n_topics), float(alpha)),
        doc_length=doc_length,
        eta=eta,
        start_period=start_period,
        seed=seed,
    )
    spec.validate()
    return spec


def _trajectory(start: float, end: float, n_periods: int, shape: str) -> np.ndarray:
    if n_periods == 1:
        return np.array([start])
    t = np.arange(n_periods, dtype=np.float64)
    if shape == "linear":
        return start + (t / (n_periods - 1)) * (end - start)
    # hump: linear rise to `end` at the middle period, linear fall back to `start`
    peak = (n_periods - 1) // 2
    rise = start + (t / max(peak, 1)) * (end - start)
    fall = end - ((t - peak) / (n_periods - 1 - peak)) * (end - start)
    return np.where(t <= peak, rise, fall)


def inject_trend(
    spec: SynthSpec,
    topic: int,
    start_share: float,
    end_share: float,
    shape: str = "linear",
) -> SynthSpec:
    """Rescale alpha so topic's Dirichlet mean follows the requested trajectory.

    Each period's total concentration is kept; the remaining mass is shared
    among the other topics in their existing proportions.
    """
    spec.validate()
    if shape not in SHAPES:
        raise InvalidSpec(f"unknown shape {shape!r}; expected one of {SHAPES}")
    if not 0 <= topic < spec.n_topics:
        raise InvalidSpec(f"topic {topic} out of range [0, {spec.n_topics})")
    if shape == "hump" and spec.n_periods < 3:
        raise InvalidSpec("a hump trajectory needs at least 3 periods")
    if not (0 < start_share < 1 and 0 < end_share < 1):
        raise InfeasibleShare("shares must lie strictly between 0 and 1")
    if spec.n_topics < 2:
        raise InfeasibleShare("a single-topic model has share 1 in every period")

    profile = np.asarray(spec.alpha_profile, dtype=np.float64)
    totals = profile.sum(axis=1)
    shares = _trajectory(start_share, end_share, spec.n_periods, shape)

    others = np.delete(profile, topic, axis=1)
    other_frac = others / others.sum(axis=1, keepdims=True)

    new_profile = np.empty_like(profile)
    new_profile[:, topic] = shares * totals
    rest = [j for j in range(spec.n_topics) if j != topic]
    new_profile[:, rest] = ((1.0 - shares) * totals)[:, None] * other_frac

    if not (new_profile > 0).all():
        raise InfeasibleShare("trajectory requires a non-positive Dirichlet parameter")
    return replace(spec, alpha_profile=new_profile)


def _doc_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def generate(spec: SynthSpec) -> tuple[list[RawDocument], SynthTruth]:
    """Draw a corpus: topics, then per document theta, then topic/word per token."""
    spec.validate()
    terms = term_names(spec.vocab_size)
    profile = np.asarray(spec.alpha_profile, dtype=np.float64)

    if spec.beta is not None:
        beta = np.asarray(spec.beta, dtype=np.float64).copy()
    else:
        beta_rng = _doc_rng(spec.seed, 0)
        beta = beta_rng.dirichlet(np.full(spec.vocab_size, spec.eta), size=spec.n_topics)

    docs: list[RawDocument] = []
    thetas: list[np.ndarray] = []
    doc_periods: list[int] = []
    doc_lengths: list[int] = []
    for t, period in enumerate(spec.periods):
        for i in range(spec.docs_per_period):
            rng = _doc_rng(spec.seed, 1, t, i)
            theta = rng.dirichlet(profile[t])
            theta = theta / theta.sum()
            if isinstance(spec.doc_length, tuple):
                low, high = spec.doc_length
                length = int(rng.integers(low, high + 1))
            else:
                length = int(spec.doc_length)
            z = rng.choice(spec.n_topics, size=length, p=theta)
            words = [int(rng.choice(spec.vocab_size, p=beta[k])) for k in z]
            doc_id = f"synth-{period}-{i:04d}"
            docs.append(RawDocument(id=doc_id, period=period, text=" ".join(terms[w] for w in words)))
            thetas.append(theta)
            doc_periods.append(period)
            doc_lengths.append(length)

    truth = SynthTruth(
        terms=tuple(terms),
        beta=beta,
        theta=np.vstack(thetas),
        doc_ids=tuple(d.id for d in docs),
        doc_periods=tuple(doc_periods),
        periods=tuple(spec.periods),
        alpha_profile=profile,
        doc_lengths=tuple(doc_lengths),
    )
    return docs, truth


def ramp_rate(start_share: float, end_share: float, n_periods: int) -> float:
    """Per-period slope of a planted linear trajectory."""
    return (end_share - start_share) / (n_periods - 1)
