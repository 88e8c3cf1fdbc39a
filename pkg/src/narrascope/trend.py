"""Topic prevalence series and monotonic-trend tests.

Mann-Kendall S with the tie-corrected variance, Kendall's tau_b, a
continuity-corrected normal approximation for the two-sided p-value, and
Sen's slope over actual period values with a rank-based confidence interval.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from narrascope.errors import InvalidConfig, TooShort
from narrascope.lda import LdaModel

logger = logging.getLogger(__name__)

MIN_LENGTH = 4
SMALL_SAMPLE = 10

CORRECTIONS = ("none", "bonferroni")


@dataclass(frozen=True)
class SeriesPoint:
    period: int
    value: float
    n_docs: int


@dataclass(frozen=True)
class TopicSeries:
    topic: int
    points: tuple[SeriesPoint, ...]

    def __post_init__(self) -> None:
        periods = [p.period for p in self.points]
        if any(b <= a for a, b in zip(periods, periods[1:])):
            raise InvalidConfig(f"topic {self.topic}: periods must be strictly increasing")
        for p in self.points:
            if p.n_docs < 1:
                raise InvalidConfig(f"topic {self.topic}, period {p.period}: n_docs must be >= 1")
            if not math.isfinite(p.value):
                raise InvalidConfig(f"topic {self.topic}, period {p.period}: non-finite value")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def periods(self) -> np.ndarray:
        return np.array([p.period for p in self.points], dtype=np.float64)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points], dtype=np.float64)


@dataclass(frozen=True)
class MannKendall:
    S: int
    tau: float
    var_S: float
    z: float
    p_value: float
    n: int


@dataclass(frozen=True)
class TrendResult:
    topic: int
    S: int
    tau: float
    var_S: float
    z: float
    p_value: float
    sen_slope: float
    ci_low: float
    ci_high: float
    n: int
    small_sample: bool

    def to_dict(self) -> dict:
        return asdict(self)


def aggregate(model: LdaModel, periods: Sequence[int]) -> list[TopicSeries]:
    """Average theta_hat over the documents of each period, one series per topic.

    Periods without documents are absent from the series.
    """
    theta = model.theta_hat
    periods = np.asarray(periods, dtype=np.int64)
    if periods.shape[0] != theta.shape[0]:
        raise InvalidConfig(
            f"{periods.shape[0]} document periods for {theta.shape[0]} model rows"
        )
    unique, inverse = np.unique(periods, return_inverse=True)
    sums = np.zeros((unique.shape[0], theta.shape[1]))
    np.add.at(sums, inverse, theta)
    counts = np.bincount(inverse, minlength=unique.shape[0])
    means = sums / counts[:, None]

    return [
        TopicSeries(
            topic=k,
            points=tuple(
                SeriesPoint(period=int(t), value=float(means[i, k]), n_docs=int(counts[i]))
                for i, t in enumerate(unique)
            ),
        )
        for k in range(theta.shape[1])
    ]


def _tie_groups(values: np.ndarray) -> np.ndarray:
    _, counts = np.unique(values, return_counts=True)
    return counts[counts > 1]


def mann_kendall(series: TopicSeries) -> MannKendall:
    """Mann-Kendall trend statistics for a series ordered by period."""
    n = len(series)
    if n < MIN_LENGTH:
        raise TooShort(f"topic {series.topic}: {n} points, need at least {MIN_LENGTH}")
    if n < SMALL_SAMPLE:
        logger.warning(
            "topic %d: n=%d < %d, normal approximation is rough", series.topic, n, SMALL_SAMPLE
        )

    x = series.values
    i, j = np.triu_indices(n, k=1)
    S = int(np.sign(x[j] - x[i]).sum())

    ties = _tie_groups(x)
    var_S = (
        n * (n - 1) * (2 * n + 5) - float((ties * (ties - 1) * (2 * ties + 5)).sum())
    ) / 18.0

    n0 = n * (n - 1) / 2.0
    n1 = float((ties * (ties - 1)).sum()) / 2.0
    if n1 == n0:
        # every value tied: no evidence of trend
        return MannKendall(S=0, tau=0.0, var_S=var_S, z=0.0, p_value=1.0, n=n)

    # periods are strictly increasing, so time has no ties
    tau = S / math.sqrt((n0 - n1) * n0)

    if S > 0:
        z = (S - 1) / math.sqrt(var_S)
    elif S < 0:
        z = (S + 1) / math.sqrt(var_S)
    else:
        z = 0.0
    p = float(min(1.0, 2.0 * norm.sf(abs(z))))
    return MannKendall(S=S, tau=float(tau), var_S=float(var_S), z=float(z), p_value=p, n=n)


def sen_slope(
    series: TopicSeries, confidence: float, var_S: float
) -> tuple[float, float, float]:
    """Median pairwise slope (per period unit) with a rank-based confidence interval.

    With N pairwise slopes sorted ascending and C = z_{(1+confidence)/2} sqrt(var_S),
    the bounds are the slopes at 1-based ranks floor((N - C)/2) and
    ceil((N + C)/2) + 1, clamped to the available ranks.
    """
    n = len(series)
    if n < MIN_LENGTH:
        raise TooShort(f"topic {series.topic}: {n} points, need at least {MIN_LENGTH}")
    if not 0 < confidence < 1:
        raise InvalidConfig("confidence must be in (0, 1)")

    t, x = series.periods, series.values
    i, j = np.triu_indices(n, k=1)
    slopes = np.sort((x[j] - x[i]) / (t[j] - t[i]))
    N = slopes.shape[0]
    slope = float(np.median(slopes))

    C = norm.ppf((1.0 + confidence) / 2.0) * math.sqrt(max(var_S, 0.0))
    lower_rank = math.floor((N - C) / 2.0)
    upper_rank = math.ceil((N + C) / 2.0) + 1
    clamped_lower = min(max(lower_rank, 1), N)
    clamped_upper = min(max(upper_rank, 1), N)
    if (clamped_lower, clamped_upper) != (lower_rank, upper_rank):
        logger.debug(
            "topic %d: CI ranks (%d, %d) clamped to [1, %d]",
            series.topic, lower_rank, upper_rank, N,
        )
    return slope, float(slopes[clamped_lower - 1]), float(slopes[clamped_upper - 1])


def analyze(series: TopicSeries, confidence: float = 0.95) -> TrendResult:
    mk = mann_kendall(series)
    slope, low, high = sen_slope(series, confidence, mk.var_S)
    return TrendResult(
        topic=series.topic,
        S=mk.S,
        tau=mk.tau,
        var_S=mk.var_S,
        z=mk.z,
        p_value=mk.p_value,
        sen_slope=slope,
        ci_low=low,
        ci_high=high,
        n=mk.n,
        small_sample=mk.n < SMALL_SAMPLE,
    )


def adjust_p_values(results: Sequence[TrendResult], correction: str) -> dict[int, float]:
    """Multiplicity-corrected p-value per topic."""
    if correction not in CORRECTIONS:
        raise InvalidConfig(f"unknown correction {correction!r}; expected one of {CORRECTIONS}")
    m = len(results)
    if correction == "bonferroni":
        return {r.topic: min(1.0, r.p_value * m) for r in results}
    return {r.topic: r.p_value for r in results}


def detect_emergence(
    results: Sequence[TrendResult],
    alpha: float = 0.01,
    correction: str = "bonferroni",
) -> list[int]:
    """Topics with S > 0 and corrected p <= alpha.

    Ordered by ascending p, then descending Sen slope, then topic index.
    """
    if not 0 < alpha < 1:
        raise InvalidConfig("alpha must be in (0, 1)")
    adjusted = adjust_p_values(results, correction)
    flagged = [r for r in results if r.S > 0 and adjusted[r.topic] <= alpha]
    flagged.sort(key=lambda r: (r.p_value, -r.sen_slope, r.topic))
    return [r.topic for r in flagged]
