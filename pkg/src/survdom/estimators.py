"""Survival samples, risk tables and product-limit step curves."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import EmptySampleError, check_survival_data

__all__ = [
    "Status",
    "Observation",
    "SurvivalSample",
    "RiskTable",
    "StepCurve",
    "risk_table",
    "km_fit",
    "censoring_km",
    "empirical_observed_survival",
    "KaplanMeierEstimator",
]


class Status(enum.IntEnum):
    CENSORED = 0
    EVENT = 1


@dataclass(frozen=True)
class Observation:
    time: float
    status: Status

    def __post_init__(self):
        if not (np.isfinite(self.time) and self.time > 0):
            raise ValueError(f"observation time must be positive and finite, got {self.time!r}")
        object.__setattr__(self, "status", Status(self.status))


class SurvivalSample:
    """An immutable right-censored sample.

    Observations are stored sorted by time with events ahead of censorings
    at tied times.

    Parameters
    ----------
    time : array-like of shape (n,)
        Observed times ``min(T, C)``.
    event : array-like of shape (n,), optional
        1 / True when the event was observed. Defaults to all events.
    label : str
    """

    __slots__ = ("time", "event", "label")

    def __init__(self, time, event=None, label=""):
        time, event = check_survival_data(time, event)
        order = np.lexsort((~event, time))
        t = time[order]
        e = event[order]
        t.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "event", e)
        object.__setattr__(self, "label", str(label))

    def __setattr__(self, name, value):
        raise AttributeError("SurvivalSample is immutable")

    @classmethod
    def from_observations(cls, observations, label=""):
        observations = list(observations)
        if not observations:
            raise EmptySampleError("survival sample is empty")
        return cls(
            [o.time for o in observations],
            [o.status == Status.EVENT for o in observations],
            label=label,
        )

    @property
    def observations(self):
        return [
            Observation(float(t), Status.EVENT if e else Status.CENSORED)
            for t, e in zip(self.time, self.event)
        ]

    def __len__(self):
        return self.time.shape[0]

    def __repr__(self):
        return (
            f"SurvivalSample(n={len(self)}, events={self.n_events}, "
            f"label={self.label!r})"
        )

    @property
    def n_events(self) -> int:
        return int(self.event.sum())

    @property
    def event_times(self):
        return self.time[self.event]

    def scaled(self, factor: float) -> "SurvivalSample":
        """Copy with every time multiplied by ``factor``."""
        return SurvivalSample(self.time * factor, self.event, label=self.label)


def _coerce_sample(sample) -> SurvivalSample:
    if isinstance(sample, SurvivalSample):
        return sample
    if isinstance(sample, tuple) and len(sample) == 2:
        return SurvivalSample(*sample)
    return SurvivalSample(sample)


@dataclass(frozen=True)
class RiskTable:
    """Per-event-time counts.

    ``n_censored[j]`` counts censorings in ``[t_{j-1}, t_j)`` with
    ``t_0 = 0``; ``n_remaining`` is the number still at risk just after the
    last event time.
    """

    time: np.ndarray
    n_at_risk: np.ndarray
    n_events: np.ndarray
    n_censored: np.ndarray
    n_total: int

    def __len__(self):
        return self.time.shape[0]

    @property
    def n_remaining(self) -> int:
        if len(self) == 0:
            return self.n_total - int(self.n_censored.sum())
        return int(self.n_at_risk[-1] - self.n_events[-1])

    def rows(self):
        return list(
            zip(
                self.time.tolist(),
                self.n_at_risk.tolist(),
                self.n_events.tolist(),
                self.n_censored.tolist(),
            )
        )


def _counts(time, flag):
    """Distinct times with at-risk counts, flagged counts and total counts."""
    uniq, inverse = np.unique(time, return_inverse=True)
    total = np.bincount(inverse, minlength=uniq.size)
    flagged = np.bincount(inverse, weights=flag.astype(float), minlength=uniq.size)
    at_risk = time.shape[0] - np.concatenate(([0], np.cumsum(total)[:-1]))
    return uniq, at_risk, flagged.astype(np.int64), total


def risk_table(sample) -> RiskTable:
    """Risk table at the distinct event times of ``sample``."""
    sample = _coerce_sample(sample)
    uniq, at_risk, d, total = _counts(sample.time, sample.event)
    c = total - d
    rows = d > 0
    # censorings at t_{j-1} belong to [t_{j-1}, t_j)
    cum_c = np.cumsum(c)
    idx = np.flatnonzero(rows)
    before = np.where(idx > 0, cum_c[np.maximum(idx - 1, 0)], 0)
    prev = np.concatenate(([0], before[:-1])) if idx.size else before
    return RiskTable(
        time=uniq[rows],
        n_at_risk=at_risk[rows].astype(np.int64),
        n_events=d[rows],
        n_censored=(before - prev).astype(np.int64),
        n_total=len(sample),
    )


class StepCurve:
    """Right-continuous non-increasing step function with value 1 at 0.

    Parameters
    ----------
    times : array-like
        Strictly increasing positive jump times.
    values : array-like
        Value on ``[times[k], times[k + 1])``.
    """

    __slots__ = ("times", "values")

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float).copy()
        values = np.asarray(values, dtype=float).copy()
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if times.size:
            if times[0] <= 0 or np.any(np.diff(times) <= 0):
                raise ValueError("jump times must be positive and strictly increasing")
            if np.any(values < -1e-12) or np.any(values > 1 + 1e-12):
                raise ValueError("step values must lie in [0, 1]")
            if np.any(np.diff(np.concatenate(([1.0], values))) > 1e-12):
                raise ValueError("step curve must be non-increasing")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("StepCurve is immutable")

    def __repr__(self):
        return f"StepCurve(n_jumps={self.times.size})"

    def __eq__(self, other):
        if not isinstance(other, StepCurve):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(
            self.values, other.values
        )

    __hash__ = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right")
        padded = np.concatenate(([1.0], self.values))
        out = padded[idx]
        return out if out.ndim else float(out)

    eval = __call__

    def left_limit(self, t):
        """Value just before ``t``."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="left")
        padded = np.concatenate(([1.0], self.values))
        out = padded[idx]
        return out if out.ndim else float(out)

    @property
    def jumps(self):
        """Mass removed at each jump time (non-negative)."""
        return -np.diff(np.concatenate(([1.0], self.values)))

    def scaled(self, factor: float) -> "StepCurve":
        return StepCurve(self.times * factor, self.values)


def _product_limit(time, flag) -> StepCurve:
    uniq, at_risk, d, _ = _counts(time, flag)
    rows = d > 0
    if not rows.any():
        return StepCurve([], [])
    factors = 1.0 - d[rows] / at_risk[rows]
    return StepCurve(uniq[rows], np.cumprod(factors))


def km_fit(sample) -> StepCurve:
    """Kaplan-Meier estimate of the event-time survival function."""
    sample = _coerce_sample(sample)
    return _product_limit(sample.time, sample.event)


def censoring_km(sample) -> StepCurve:
    """Reverse Kaplan-Meier estimate of the censoring survival function.

    Censorings play the role of events; events tied with a censoring are
    still at risk for it.
    """
    sample = _coerce_sample(sample)
    return _product_limit(sample.time, ~sample.event)


def empirical_observed_survival(sample) -> StepCurve:
    """``t -> #{X_i > t} / n`` over the observed times, ignoring status."""
    sample = _coerce_sample(sample)
    uniq, at_risk, _, total = _counts(sample.time, sample.event)
    n = len(sample)
    return StepCurve(uniq, (at_risk - total) / n)


class KaplanMeierEstimator(BaseEstimator):
    """Product-limit estimator with a scikit-learn style interface.

    Parameters
    ----------
    reverse : bool, default=False
        Estimate the censoring survival function instead (reverse KM).

    Attributes
    ----------
    survival_function_ : StepCurve
    risk_table_ : RiskTable
    n_samples_ : int
    """

    def __init__(self, reverse=False):
        self.reverse = reverse

    def fit(self, time, event=None):
        sample = SurvivalSample(time, event)
        self.survival_function_ = censoring_km(sample) if self.reverse else km_fit(sample)
        self.risk_table_ = risk_table(
            SurvivalSample(sample.time, ~sample.event) if self.reverse else sample
        )
        self.n_samples_ = len(sample)
        return self

    def predict(self, times):
        """Estimated survival probability at ``times``."""
        check_is_fitted(self, "survival_function_")
        return self.survival_function_(np.asarray(times, dtype=float))

    def predict_left(self, times):
        check_is_fitted(self, "survival_function_")
        return self.survival_function_.left_limit(np.asarray(times, dtype=float))
