"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numbers

import numpy as np


class EmptySampleError(ValueError):
    """Raised when an operation needs at least one observation."""


def check_survival_data(time, event=None, *, allow_empty=False):
    """Validate a pair of time / event arrays.

    Parameters
    ----------
    time : array-like of shape (n,)
        Observed times, strictly positive and finite.
    event : array-like of shape (n,), optional
        Event indicators; truthy means the event was observed, falsy means
        right-censored. Defaults to all events.

    Returns
    -------
    time : ndarray of float64
    event : ndarray of bool
    """
    time = np.asarray(time, dtype=float)
    if time.ndim != 1:
        time = time.ravel()
    if event is None:
        event = np.ones(time.shape, dtype=bool)
    else:
        event = np.asarray(event)
        if event.ndim != 1:
            event = event.ravel()
        if event.shape != time.shape:
            raise ValueError(
                f"time and event lengths differ: {time.shape[0]} != {event.shape[0]}"
            )
        if event.dtype != bool:
            if not np.all(np.isin(event, (0, 1))):
                raise ValueError("event indicators must be 0/1 or boolean")
            event = event.astype(bool)
    if time.size == 0 and not allow_empty:
        raise EmptySampleError("survival sample is empty")
    if not np.all(np.isfinite(time)):
        raise ValueError("observation times must be finite")
    if np.any(time <= 0):
        raise ValueError("observation times must be strictly positive")
    return time, event


def check_scalar_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return grid
