"""Lagged Pearson correlation between topic prevalence and external indicators.

At lag l the topic value at period t is paired with the indicator value at
t + l, over the periods where both exist. Positive l means topic prevalence
precedes the indicator. Series are correlated raw: no detrending or
differencing, so two trending series correlate strongly at many lags.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from narrascope.errors import InvalidConfig, NoValidLag
from narrascope.trend import TopicSeries

logger = logging.getLogger(__name__)

CONTEMPORANEOUS = "contemporaneous"
NEAR_CONTEMPORANEOUS = "near-contemporaneous"
TOPIC_LEADS = "topic precedes citations"
INDICATOR_LEADS = "citations precede topic"
WEAK = "weak / misaligned"


@dataclass(frozen=True)
class IndicatorSeries:
    name: str
    points: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        periods = [t for t, _ in self.points]
        if any(b <= a for a, b in zip(periods, periods[1:])):
            raise InvalidConfig(f"indicator {self.name!r}: periods must be strictly increasing")
        for t, v in self.points:
            if not math.isfinite(v):
                raise InvalidConfig(f"indicator {self.name!r}, period {t}: non-finite value")

    def as_mapping(self) -> dict[int, float]:
        return {int(t): float(v) for t, v in self.points}


@dataclass(frozen=True)
class LagPoint:
    lag: int
    r: float
    n: int


@dataclass(frozen=True)
class LagProfile:
    points: tuple[LagPoint, ...]
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class LagResult:
    topic: int
    indicator: str
    profile: tuple[LagPoint, ...]
    best_lag: int
    max_corr: float
    corr_at_zero: float | None
    all_negative: bool
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "topic": self.topic,
            "indicator": self.indicator,
            "best_lag": self.best_lag,
            "max_corr": self.max_corr,
            "corr_at_zero": self.corr_at_zero,
            "all_negative": self.all_negative,
            "notes": list(self.notes),
            "profile": [{"lag": p.lag, "r": p.r, "n": p.n} for p in self.profile],
        }


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    xm = x - x.mean()
    ym = y - y.mean()
    r = float((xm * ym).sum() / math.sqrt(float((xm * xm).sum()) * float((ym * ym).sum())))
    return min(1.0, max(-1.0, r))


def lagged_profile(
    x: Mapping[int, float],
    y: Mapping[int, float],
    max_lag: int = 10,
    min_overlap: int = 10,
) -> LagProfile:
    """Pearson r of x[t] against y[t + lag] for every lag in [-max_lag, max_lag].

    Lags with fewer than `min_overlap` pairs, or where either paired sequence
    is constant, are left out (the latter with a note).
    """
    if max_lag < 0:
        raise InvalidConfig("max_lag must be >= 0")
    if min_overlap < 3:
        raise InvalidConfig("min_overlap must be >= 3")

    points: list[LagPoint] = []
    notes: list[str] = []
    periods = sorted(x)
    for lag in range(-max_lag, max_lag + 1):
        paired = [(x[t], y[t + lag]) for t in periods if (t + lag) in y]
        if len(paired) < min_overlap:
            continue
        xs = np.array([a for a, _ in paired], dtype=np.float64)
        ys = np.array([b for _, b in paired], dtype=np.float64)
        if np.ptp(xs) == 0 or np.ptp(ys) == 0:
            notes.append(f"lag {lag}: zero variance, omitted")
            logger.debug("lag %d omitted: constant paired sequence", lag)
            continue
        points.append(LagPoint(lag=lag, r=pearson(xs, ys), n=len(paired)))
    return LagProfile(points=tuple(points), notes=tuple(notes))


def _best(points: tuple[LagPoint, ...]) -> LagPoint:
    # max r; ties → smallest |lag|, then the more negative lag
    return min(points, key=lambda p: (-p.r, abs(p.lag), p.lag))


def lag_correlation(
    topic: TopicSeries,
    indicator: IndicatorSeries,
    max_lag: int = 10,
    min_overlap: int = 10,
) -> LagResult:
    """Lag profile of one topic against one indicator, with the optimal lag."""
    x = {p.period: p.value for p in topic.points}
    profile = lagged_profile(x, indicator.as_mapping(), max_lag, min_overlap)
    if not profile.points:
        raise NoValidLag(
            f"topic {topic.topic} vs {indicator.name!r}: no lag in ±{max_lag} "
            f"with {min_overlap} overlapping non-constant periods"
        )
    best = _best(profile.points)
    at_zero = next((p.r for p in profile.points if p.lag == 0), None)
    return LagResult(
        topic=topic.topic,
        indicator=indicator.name,
        profile=profile.points,
        best_lag=best.lag,
        max_corr=best.r,
        corr_at_zero=at_zero,
        all_negative=all(p.r < 0 for p in profile.points),
        notes=profile.notes,
    )


def classify_pattern(
    result: LagResult, near_window: int = 2, weak_threshold: float = 0.3
) -> str:
    """Qualitative label of the lead-lag relation."""
    if result.max_corr < weak_threshold or result.max_corr < 0:
        return WEAK
    lag = result.best_lag
    if lag == 0:
        return CONTEMPORANEOUS
    if abs(lag) <= near_window:
        return NEAR_CONTEMPORANEOUS
    return TOPIC_LEADS if lag > 0 else INDICATOR_LEADS
