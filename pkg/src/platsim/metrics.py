"""Per-message outcomes and condition-level aggregates.

For each metric (reach, exposure, reshares, likes):

* breadth: share of messages with a nonzero value;
* depth: arithmetic and geometric mean among the nonzero messages;
* unconditional mean: breadth x arithmetic depth, i.e. total / messages.

Condition tables are computed in the ``reshared`` scope by default: a
message enters the diffusion statistics once at least one agent has
reshared it, and a never-reshared message counts as zero on every metric.
``all`` scope uses the raw per-message counts.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

METRICS = ("reach", "exposure", "reshares", "likes")


@dataclass(frozen=True)
class MessageOutcome:
    msg_id: int
    created_step: int
    k: float
    beta: float
    alpha: float
    reach: int
    exposure: int
    reshares: int
    likes: int

    def violations(self) -> list[str]:
        bad = []
        if self.exposure > self.reach:
            bad.append("exposure > reach")
        if self.likes > self.exposure:
            bad.append("likes > exposure")
        if self.reshares > self.exposure:
            bad.append("reshares > exposure")
        return bad


class MetricScope(enum.Enum):
    RESHARED = "reshared"
    ALL = "all"

    @classmethod
    def parse(cls, value: "str | MetricScope") -> "MetricScope":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown metric scope {value!r}; expected reshared or all") from None


def in_scope(outcomes: Iterable[MessageOutcome], scope: "str | MetricScope" = MetricScope.RESHARED) -> list[MessageOutcome]:
    """Outcomes as seen under ``scope`` (zeroing never-reshared messages for ``reshared``)."""
    outcomes = list(outcomes)
    if MetricScope.parse(scope) is MetricScope.ALL:
        return outcomes
    return [o if o.reshares > 0 else dataclasses.replace(o, reach=0, exposure=0, likes=0) for o in outcomes]


@dataclass(frozen=True)
class MetricSummary:
    breadth: float
    depth_arith: float | None
    depth_geom: float | None
    unconditional_mean: float
    nonzero: int


@dataclass(frozen=True)
class ConditionSummary:
    n_messages: int
    reach: MetricSummary
    exposure: MetricSummary
    reshares: MetricSummary
    likes: MetricSummary
    exposure_weighted_quality: float | None

    def metric(self, name: str) -> MetricSummary:
        if name not in METRICS:
            raise KeyError(name)
        return getattr(self, name)

    def to_dict(self) -> dict:
        return asdict(self)


def _metric_summary(values: np.ndarray) -> MetricSummary:
    n = len(values)
    nz = values[values > 0]
    if len(nz) == 0:
        return MetricSummary(0.0, None, None, 0.0, 0)
    breadth = len(nz) / n
    arith = float(nz.mean())
    geom = float(np.exp(np.log(nz).mean()))
    # AM >= GM holds exactly; float rounding can flip it for equal values
    geom = min(geom, arith)
    return MetricSummary(breadth, arith, geom, breadth * arith, int(len(nz)))


def _column(outcomes: Sequence[MessageOutcome], name: str) -> np.ndarray:
    return np.fromiter((getattr(o, name) for o in outcomes), dtype=float, count=len(outcomes))


def summarize(outcomes: Iterable[MessageOutcome]) -> ConditionSummary:
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("cannot summarize an empty collection of messages")
    return ConditionSummary(
        n_messages=len(outcomes),
        **{name: _metric_summary(_column(outcomes, name)) for name in METRICS},
        exposure_weighted_quality=exposure_weighted_quality(outcomes),
    )


def exposure_weighted_quality(outcomes: Iterable[MessageOutcome]) -> float | None:
    """Mean quality over (agent, message) exposure pairs; None if nothing was seen."""
    outcomes = list(outcomes)
    w = _column(outcomes, "exposure")
    total = w.sum()
    if total <= 0:
        return None
    # math.fsum keeps the result independent of input order
    return math.fsum((w * _column(outcomes, "alpha")).tolist()) / total


def hot_lifo_ratio(hot: ConditionSummary, lifo: ConditionSummary, metric: str) -> float:
    h = hot.metric(metric).unconditional_mean
    l_ = lifo.metric(metric).unconditional_mean
    if not l_ > 0:
        raise ValueError(f"LIFO unconditional mean for {metric} is zero; ratio undefined")
    return h / l_


def seed_quality_dispersion(qualities: Sequence[float]) -> tuple[float, float, float]:
    if len(qualities) < 2:
        raise ValueError("need at least two seeds")
    lo, hi = min(qualities), max(qualities)
    return lo, hi, hi - lo


def early_exposure_share(outcomes: Sequence[MessageOutcome], fraction: float = 0.1) -> float:
    """Share of all exposure landing on the earliest ``fraction`` of messages by production order."""
    outcomes = sorted(outcomes, key=lambda o: o.msg_id)
    w = _column(outcomes, "exposure")
    total = w.sum()
    if total <= 0:
        return 0.0
    cut = int(math.ceil(fraction * len(outcomes)))
    return float(w[:cut].sum() / total)


def validity_counts(outcomes: Iterable[MessageOutcome]) -> dict[str, int]:
    outcomes = list(outcomes)
    return {
        "reshares_without_reach": sum(o.reshares > 0 and o.reach == 0 for o in outcomes),
        "exposure_without_reshare": sum(o.exposure > 0 and o.reshares == 0 for o in outcomes),
        "likes_exceeding_exposure": sum(o.likes > o.exposure for o in outcomes),
        "exposure_exceeding_reach": sum(o.exposure > o.reach for o in outcomes),
    }


def zero_inflation(outcomes: Iterable[MessageOutcome]) -> dict[str, float]:
    """Percent of messages with a zero value, per metric."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("no messages")
    n = len(outcomes)
    return {name: 100.0 * sum(getattr(o, name) == 0 for o in outcomes) / n for name in METRICS}
