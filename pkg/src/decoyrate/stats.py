"""Finite-size statistics: multiplicative Chernoff deviations and yield intervals."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class ChernoffArg(str, enum.Enum):
    """What gets fed to the deviation function for an observed yield.

    ``PAPER_LITERAL`` multiplies the observed count by the observed yield,
    ``COUNTS`` uses the observed count alone.
    """

    PAPER_LITERAL = "paper-literal"
    COUNTS = "counts"


def chernoff_delta(x: float, eps: float) -> float:
    """Relative half-width such that both multiplicative tails are below eps/2.

    Solves ``delta**2 * x / (2 + delta) = -ln(eps/2)`` for the positive root.
    """
    if not x > 0:
        raise ValueError(f"chernoff_delta needs x > 0, got {x}")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    ln = math.log(eps / 2.0)
    return (-ln + math.sqrt(ln * ln - 8.0 * ln * x)) / (2.0 * x)


@dataclass(frozen=True)
class YieldObservation:
    counts: float
    err_counts: float
    denom: float

    def __post_init__(self):
        if not (0 <= self.err_counts <= self.counts <= self.denom):
            raise ValueError(
                f"need 0 <= errors ({self.err_counts}) <= counts ({self.counts}) <= pulses ({self.denom})"
            )

    @property
    def S(self) -> float:
        return self.counts / self.denom

    @property
    def T(self) -> float:
        return self.err_counts / self.denom


@dataclass(frozen=True)
class ChernoffInterval:
    lower: float
    upper: float
    delta: float
    value: float

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.upper)

    def __contains__(self, y: float) -> bool:
        return self.lower <= y <= self.upper


def count_interval(count: float, denom: float, eps: float,
                   arg: ChernoffArg = ChernoffArg.COUNTS) -> ChernoffInterval:
    """Interval on the mean rate behind ``count`` detections out of ``denom`` trials."""
    if count < 0 or denom <= 0:
        raise ValueError(f"need count >= 0 and denom > 0, got {count}, {denom}")
    value = count / denom
    if count == 0:
        # additive limit of the tail bound at zero observed counts
        return ChernoffInterval(0.0, -math.log(eps / 2.0) / denom, math.inf, 0.0)
    x = count if ChernoffArg(arg) is ChernoffArg.COUNTS else count * value
    d = chernoff_delta(x, eps)
    upper = value / (1.0 - d) if d < 1.0 else math.inf
    return ChernoffInterval(value / (1.0 + d), upper, d, value)


def yield_interval(obs: YieldObservation, eps: float,
                   arg: ChernoffArg = ChernoffArg.COUNTS) -> ChernoffInterval:
    return count_interval(obs.counts, obs.denom, eps, arg)


def error_interval(obs: YieldObservation, eps: float,
                   arg: ChernoffArg = ChernoffArg.COUNTS) -> ChernoffInterval:
    return count_interval(obs.err_counts, obs.denom, eps, arg)
