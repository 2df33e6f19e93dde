"""Tendency classification of an observed campaign against device profiles.

The verdict is deliberately not a boolean.  The score says which reference
the observation sits closer to, measured in units of each reference's own
pooled spread, and the label collapses to inconclusive both inside the
margin band and whenever the two references cannot be told apart in the
first place.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import EmptyInputError, ValidationError
from .stats import (
    ComparisonResult,
    SummaryStats,
    _z_distance,
    mean_ratio,
    pool,
    summarize,
    welch_t,
)
from .validation import THERMAL_STATES, check_choice

CONFIG_ROOTED = "rooted"
CONFIG_STOCK = "stock"
CONFIGURATIONS = (CONFIG_ROOTED, CONFIG_STOCK)

LABEL_ROOTED_LEANING = "rooted-leaning"
LABEL_STOCK_LEANING = "stock-leaning"
LABEL_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DeviceProfile:
    """Reference timing behaviour of one device in one configuration."""

    device_label: str
    configuration: str  # rooted | stock
    thermal_state: str  # warm | cold | unknown
    runs: tuple[SummaryStats, ...]

    def __post_init__(self):
        check_choice(self.configuration, CONFIGURATIONS, "configuration")
        check_choice(self.thermal_state, THERMAL_STATES, "thermal_state")
        if not isinstance(self.runs, tuple):
            object.__setattr__(self, "runs", tuple(self.runs))
        if not self.runs:
            raise ValidationError("profile requires at least one run")
        for run in self.runs:
            if not isinstance(run, SummaryStats):
                raise ValidationError(f"profile runs must be SummaryStats, got {type(run).__name__}")

    def pooled(self) -> SummaryStats:
        return pool(self.runs)


@dataclass(frozen=True)
class ClassifierThresholds:
    margin: float = 0.15
    separability_ratio: float = 1.5

    def __post_init__(self):
        if not 0.0 < self.margin < 0.5:
            raise ValidationError(f"margin must be in (0, 0.5), got {self.margin!r}")
        if self.separability_ratio < 1.0:
            raise ValidationError(
                f"separability_ratio must be >= 1, got {self.separability_ratio!r}"
            )


@dataclass(frozen=True)
class TendencyVerdict:
    """Outcome of one classification.  score 1.0 means rooted-leaning.

    comparisons holds a Welch comparison against each reference, keyed by
    role ("rooted"/"stock"); an entry is None when a side has too few
    samples for the t statistic.
    """

    score: float
    label: str
    observed: SummaryStats
    z_to_rooted: float
    z_to_stock: float
    comparisons: dict[str, ComparisonResult | None]
    warnings: tuple[str, ...] = ()


def builtin_profiles() -> list[DeviceProfile]:
    """The recorded reference profiles this toolkit ships with.

    Three runs of 100 warm-state queries per profile, stored as
    (mean, stddev) pairs in ms.  There is no stock profile for the first
    handset; its stock timings were never recorded precisely enough to
    encode, and nothing is fabricated to fill the gap.
    """

    def runs(rows):
        return tuple(SummaryStats(n=100, mean=m, stddev=s) for m, s in rows)

    return [
        DeviceProfile(
            device_label="S4 rooted",
            configuration=CONFIG_ROOTED,
            thermal_state="warm",
            runs=runs([(258.01, 131.28), (404.02, 520.37), (318.38, 32.17)]),
        ),
        DeviceProfile(
            device_label="S5 rooted",
            configuration=CONFIG_ROOTED,
            thermal_state="warm",
            runs=runs([(16.13, 43.61), (13.40, 38.99), (14.47, 45.21)]),
        ),
        DeviceProfile(
            device_label="S5 stock",
            configuration=CONFIG_STOCK,
            thermal_state="warm",
            runs=runs([(5.90, 1.64), (6.15, 2.11), (5.58, 0.86)]),
        ),
    ]


def profile_by_label(profiles: Sequence[DeviceProfile], label: str) -> DeviceProfile:
    for p in profiles:
        if p.device_label == label:
            return p
    known = ", ".join(repr(p.device_label) for p in profiles)
    raise ValidationError(f"no profile labelled {label!r} (have: {known})")


def _coerce_observed(observed) -> SummaryStats:
    if isinstance(observed, SummaryStats):
        return observed
    if isinstance(observed, Sequence) and not isinstance(observed, (str, bytes)):
        if len(observed) == 0:
            raise EmptyInputError("observation is empty")
        if all(isinstance(o, SummaryStats) for o in observed):
            return pool(observed)
        return summarize(observed)
    raise ValidationError(
        f"observed must be SummaryStats, a list of them, or raw rtts, got {type(observed).__name__}"
    )


def classify(
    observed,
    rooted_ref: DeviceProfile,
    stock_ref: DeviceProfile,
    thresholds: ClassifierThresholds | None = None,
    observed_thermal: str = "unknown",
) -> TendencyVerdict:
    """Score an observation between a rooted and a stock reference.

    observed may be a SummaryStats, a list of per-run SummaryStats
    (pooled exactly, as if concatenated), or a raw rtt vector in ms.

    z_to_* is the gap between the observed mean and the reference's
    pooled mean in units of that reference's pooled stddev; the score is
    z_to_stock / (z_to_stock + z_to_rooted), so sitting far from stock
    pushes the score toward 1.  Labels apply a +-margin band around 0.5,
    and the verdict is forced inconclusive when the references' pooled
    means are within the separability ratio of each other.
    """
    if thresholds is None:
        thresholds = ClassifierThresholds()
    check_choice(observed_thermal, THERMAL_STATES, "observed_thermal")

    obs = _coerce_observed(observed)
    rooted_pooled = rooted_ref.pooled()
    stock_pooled = stock_ref.pooled()

    z_rooted = _z_distance(abs(obs.mean - rooted_pooled.mean), rooted_pooled.stddev)
    z_stock = _z_distance(abs(obs.mean - stock_pooled.mean), stock_pooled.stddev)

    if math.isinf(z_stock) and math.isinf(z_rooted):
        score = 0.5
    elif math.isinf(z_stock):
        score = 1.0
    elif math.isinf(z_rooted):
        score = 0.0
    elif z_stock + z_rooted == 0.0:
        score = 0.5
    else:
        score = z_stock / (z_stock + z_rooted)

    if score >= 0.5 + thresholds.margin:
        label = LABEL_ROOTED_LEANING
    elif score <= 0.5 - thresholds.margin:
        label = LABEL_STOCK_LEANING
    else:
        label = LABEL_INCONCLUSIVE

    warnings: list[str] = []
    for ref in (rooted_ref, stock_ref):
        if observed_thermal != ref.thermal_state:
            warnings.append(
                f"thermal state mismatch: observation is {observed_thermal!r} but "
                f"reference {ref.device_label!r} was recorded {ref.thermal_state!r}"
            )

    comparisons: dict[str, ComparisonResult | None] = {}
    for role, pooled_ref in (("rooted", rooted_pooled), ("stock", stock_pooled)):
        if obs.n >= 2 and pooled_ref.n >= 2:
            comparisons[role] = welch_t(obs, pooled_ref)
        else:
            comparisons[role] = None
    if any(c is None for c in comparisons.values()):
        warnings.append("t comparison unavailable: fewer than 2 samples on one side")

    separation = mean_ratio(rooted_pooled.mean, stock_pooled.mean)
    if separation < thresholds.separability_ratio:
        warnings.append(
            f"references are inseparable: pooled means differ only x{separation:.3f}, "
            f"below the x{thresholds.separability_ratio:.2f} separability threshold"
        )
        label = LABEL_INCONCLUSIVE

    return TendencyVerdict(
        score=score,
        label=label,
        observed=obs,
        z_to_rooted=z_rooted,
        z_to_stock=z_stock,
        comparisons=comparisons,
        warnings=tuple(warnings),
    )
