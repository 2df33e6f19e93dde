"""Descriptive statistics and two-distribution comparison for rtt samples.

All stddevs are sample stddevs (n-1 denominator).  Whether the reference
measurements this toolkit ships with used the sample or population
estimator is not recorded anywhere; treat small stddev differences against
those references accordingly.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import EmptyInputError, InsufficientSamplesError
from .validation import check_rtts


@dataclass(frozen=True)
class SummaryStats:
    """Moments and order statistics of one run's round-trip times, in ms.

    Order statistics are None for summaries reconstructed from recorded
    (mean, stddev) pairs, where the underlying samples are unavailable.
    """

    n: int
    mean: float
    stddev: float
    min: float | None = None
    max: float | None = None
    median: float | None = None
    p95: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise EmptyInputError("summary requires n >= 1")
        if self.stddev < 0:
            raise ValueError("stddev must be >= 0")
        if self.min is not None and self.median is not None and self.max is not None:
            if not self.min <= self.median <= self.max:
                raise ValueError("requires min <= median <= max")

    @classmethod
    def from_moments(cls, n: int, mean: float, stddev: float) -> "SummaryStats":
        return cls(n=n, mean=mean, stddev=stddev)


@dataclass(frozen=True)
class ComparisonResult:
    """Welch's t comparison of two summaries, plus scale-free distances.

    z_distance_a is the gap between the means measured in units of a's
    stddev (math.inf when a's stddev is 0 and the means differ).
    mean_ratio is the larger mean over the smaller one.
    """

    t_statistic: float
    degrees_of_freedom: float
    mean_ratio: float
    z_distance_a: float
    z_distance_b: float


def _percentile(sorted_values: Sequence[float], q: float) -> float:
    # linear interpolation between closest ranks
    pos = q * (len(sorted_values) - 1)
    lo = math.floor(pos)
    frac = pos - lo
    if frac == 0.0:
        return sorted_values[lo]
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo])


def summarize(rtts: Sequence[float]) -> SummaryStats:
    """Summary statistics of an rtt vector in ms."""
    if len(rtts) == 0:
        raise EmptyInputError("cannot summarize an empty rtt list")
    values = check_rtts(rtts)
    n = len(values)
    mean = math.fsum(values) / n
    if n > 1:
        ss = math.fsum((v - mean) ** 2 for v in values)
        stddev = math.sqrt(ss / (n - 1))
    else:
        stddev = 0.0
    ordered = sorted(values)
    return SummaryStats(
        n=n,
        mean=mean,
        stddev=stddev,
        min=ordered[0],
        max=ordered[-1],
        median=_percentile(ordered, 0.5),
        p95=_percentile(ordered, 0.95),
    )


def pool(parts: Sequence[SummaryStats]) -> SummaryStats:
    """Combine per-run summaries exactly as if their samples were concatenated.

    Mean and stddev are reconstructed from the within-run and between-run
    sums of squares, so pooling summaries agrees with summarizing the raw
    concatenation.  Median and p95 are not derivable from summaries and are
    None unless a single part is passed through unchanged.
    """
    if not parts:
        raise EmptyInputError("cannot pool zero summaries")
    if len(parts) == 1:
        return parts[0]
    n_total = sum(p.n for p in parts)
    mean = math.fsum(p.n * p.mean for p in parts) / n_total
    ss = math.fsum((p.n - 1) * p.stddev**2 + p.n * (p.mean - mean) ** 2 for p in parts)
    stddev = math.sqrt(ss / (n_total - 1)) if n_total > 1 else 0.0
    mins = [p.min for p in parts]
    maxs = [p.max for p in parts]
    return SummaryStats(
        n=n_total,
        mean=mean,
        stddev=stddev,
        min=min(mins) if all(m is not None for m in mins) else None,
        max=max(maxs) if all(m is not None for m in maxs) else None,
    )


def _z_distance(gap: float, stddev: float) -> float:
    if stddev > 0:
        return gap / stddev
    return 0.0 if gap == 0.0 else math.inf


def mean_ratio(mean_a: float, mean_b: float) -> float:
    """Larger mean over smaller; 1.0 when equal, inf when the smaller is <= 0."""
    lo, hi = sorted((mean_a, mean_b))
    if lo == hi:
        return 1.0
    if lo <= 0.0:
        return math.inf
    return hi / lo


def welch_t(a: SummaryStats, b: SummaryStats) -> ComparisonResult:
    """Welch's unequal-variance t comparison of two summaries.

    Chosen over the pooled-variance t because observed rooted/stock rtt
    distributions have grossly unequal spreads.  Degenerate inputs yield
    infinities rather than errors: both stddevs zero with distinct means
    gives an infinite t, and degrees_of_freedom is 0 when no side
    contributes variance.
    """
    for name, s in (("a", a), ("b", b)):
        if s.n < 2:
            raise InsufficientSamplesError(f"welch_t needs n >= 2 on side {name}, got {s.n}")
    va_n = a.stddev**2 / a.n
    vb_n = b.stddev**2 / b.n
    gap = a.mean - b.mean
    if va_n + vb_n > 0:
        t = gap / math.sqrt(va_n + vb_n)
        df = (va_n + vb_n) ** 2 / (va_n**2 / (a.n - 1) + vb_n**2 / (b.n - 1))
    else:
        t = 0.0 if gap == 0.0 else math.copysign(math.inf, gap)
        df = 0.0

    return ComparisonResult(
        t_statistic=t,
        degrees_of_freedom=df,
        mean_ratio=mean_ratio(a.mean, b.mean),
        z_distance_a=_z_distance(abs(gap), a.stddev),
        z_distance_b=_z_distance(abs(gap), b.stddev),
    )
