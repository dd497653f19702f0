"""Two-sample weighted log-rank tests."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimators import _coerce_sample
from .numerics import chi_square_sf

__all__ = ["Variant", "WLRResult", "weighted_logrank", "all_variants", "WeightedLogRankTest"]


class Variant(str, enum.Enum):
    LOG_RANK = "log-rank"
    GEHAN = "gehan"
    TARONE_WARE = "tarone-ware"
    PETO_PETO = "peto-peto"
    MODIFIED_PETO_PETO = "modified-peto-peto"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-").replace(" ", "-")
        for v in cls:
            if key in (v.value, v.name.lower().replace("_", "-")):
                return v
        raise ValueError(f"unknown weighted log-rank variant {value!r}")


@dataclass(frozen=True)
class WLRResult:
    variant: Variant
    observed: float
    expected: float
    score: float
    variance: float
    statistic: float
    p: float

    def as_dict(self):
        return {
            "variant": self.variant.value,
            "observed": self.observed,
            "expected": self.expected,
            "score": self.score,
            "variance": self.variance,
            "statistic": self.statistic,
            "p": self.p,
        }


def _pooled_table(sample_1, sample_2):
    time = np.concatenate((sample_1.time, sample_2.time))
    event = np.concatenate((sample_1.event, sample_2.event))
    first = np.concatenate((np.ones(len(sample_1), bool), np.zeros(len(sample_2), bool)))
    uniq, inverse = np.unique(time, return_inverse=True)
    size = uniq.size
    total = np.bincount(inverse, minlength=size)
    total_1 = np.bincount(inverse, weights=first, minlength=size)
    d = np.bincount(inverse, weights=event, minlength=size)
    d_1 = np.bincount(inverse, weights=event & first, minlength=size)
    n = time.size - np.concatenate(([0], np.cumsum(total)[:-1]))
    n_1 = len(sample_1) - np.concatenate(([0.0], np.cumsum(total_1)[:-1]))
    rows = d > 0
    return n[rows].astype(float), n_1[rows], d[rows], d_1[rows]


def _weights(variant, n, d):
    if variant is Variant.LOG_RANK:
        return np.ones_like(n)
    if variant is Variant.GEHAN:
        return n
    if variant is Variant.TARONE_WARE:
        return np.sqrt(n)
    # Peto-Prentice survival estimate, including the current event time
    s = np.cumprod(1.0 - d / (n + 1.0))
    if variant is Variant.PETO_PETO:
        return s
    return s * n / (n + 1.0)


def weighted_logrank(sample_1, sample_2, variant=Variant.LOG_RANK) -> WLRResult:
    """Weighted log-rank comparison of two samples.

    Score ``sum_j w_j (d_1j - d_j n_1j / n_j)`` over the pooled event
    times, standardized by the hypergeometric variance and referred to a
    chi-square law with one degree of freedom.
    """
    variant = Variant.parse(variant)
    sample_1 = _coerce_sample(sample_1)
    sample_2 = _coerce_sample(sample_2)
    n, n_1, d, d_1 = _pooled_table(sample_1, sample_2)
    if n.size == 0:
        raise ValueError("no events in either sample")
    expected = d * n_1 / n
    frac = n_1 / n
    with np.errstate(invalid="ignore", divide="ignore"):
        var = np.where(n > 1, d * frac * (1.0 - frac) * (n - d) / (n - 1.0), 0.0)
    w = _weights(variant, n, d)
    score = float(np.sum(w * (d_1 - expected)))
    variance = float(np.sum(w * w * var))
    if not variance > 0:
        raise ValueError("weighted log-rank variance is zero")
    statistic = score * score / variance
    return WLRResult(
        variant=variant,
        observed=float(d_1.sum()),
        expected=float(expected.sum()),
        score=score,
        variance=variance,
        statistic=statistic,
        p=float(chi_square_sf(statistic, 1)),
    )


def all_variants(sample_1, sample_2):
    """Every :class:`Variant` in declaration order."""
    return [weighted_logrank(sample_1, sample_2, v) for v in Variant]


class WeightedLogRankTest(BaseEstimator):
    """Estimator front end to :func:`weighted_logrank`.

    Parameters
    ----------
    variant : str or Variant, default="log-rank"
    """

    def __init__(self, variant="log-rank"):
        self.variant = variant

    def fit(self, sample_1, sample_2):
        self.result_ = weighted_logrank(sample_1, sample_2, self.variant)
        self.statistic_ = self.result_.statistic
        self.pvalue_ = self.result_.p
        return self

    def decision(self, alpha=0.05):
        check_is_fitted(self, "result_")
        return self.pvalue_ <= alpha
