"""Estimator-style wrapper so campaigns can sit in standard ML pipelines.

The underlying verdict is three-valued by design, so predictions are
tendency labels, never the raw training configurations: an estimator that
answered plain "rooted" would overstate what a timing side channel can
support.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .classify import (
    CONFIG_ROOTED,
    CONFIG_STOCK,
    LABEL_INCONCLUSIVE,
    LABEL_ROOTED_LEANING,
    LABEL_STOCK_LEANING,
    ClassifierThresholds,
    DeviceProfile,
    TendencyVerdict,
    classify,
)
from .errors import ValidationError
from .stats import summarize
from .validation import check_rtts


class RootTendencyClassifier(BaseEstimator):
    """Score rtt campaigns between fitted rooted and stock references.

    X is a sequence of campaigns, each campaign a vector of rtt samples
    in ms; campaigns may differ in length, so X need not be rectangular.
    fit() takes y labels "rooted" / "stock" and builds one reference
    profile per class, each campaign contributing one run.
    """

    def __init__(self, margin: float = 0.15, separability_ratio: float = 1.5):
        self.margin = margin
        self.separability_ratio = separability_ratio

    def fit(self, X, y):
        X = list(X)
        y = [str(label) for label in y]
        if len(X) != len(y):
            raise ValidationError(f"X and y lengths differ: {len(X)} vs {len(y)}")
        runs = {CONFIG_ROOTED: [], CONFIG_STOCK: []}
        for rtts, label in zip(X, y):
            if label not in runs:
                raise ValidationError(f"labels must be 'rooted' or 'stock', got {label!r}")
            runs[label].append(summarize(check_rtts(rtts, "campaign")))
        for config, collected in runs.items():
            if not collected:
                raise ValidationError(f"fit needs at least one {config!r} campaign")
        self.thresholds_ = ClassifierThresholds(self.margin, self.separability_ratio)
        self.rooted_profile_ = DeviceProfile(
            "fitted rooted", CONFIG_ROOTED, "unknown", tuple(runs[CONFIG_ROOTED])
        )
        self.stock_profile_ = DeviceProfile(
            "fitted stock", CONFIG_STOCK, "unknown", tuple(runs[CONFIG_STOCK])
        )
        self.classes_ = np.array(
            [LABEL_STOCK_LEANING, LABEL_INCONCLUSIVE, LABEL_ROOTED_LEANING], dtype=object
        )
        return self

    def verdicts(self, X) -> list[TendencyVerdict]:
        """Full TendencyVerdict per campaign, in input order."""
        check_is_fitted(self, "rooted_profile_")
        return [
            classify(
                check_rtts(rtts, "campaign"),
                self.rooted_profile_,
                self.stock_profile_,
                self.thresholds_,
            )
            for rtts in X
        ]

    def decision_function(self, X) -> np.ndarray:
        """Scores in [0, 1]; 1 leans rooted."""
        return np.array([v.score for v in self.verdicts(X)])

    def predict(self, X) -> np.ndarray:
        return np.array([v.label for v in self.verdicts(X)], dtype=object)
