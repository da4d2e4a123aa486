"""Shared input checks.

Every public entry point funnels its array/interval arguments through these
helpers so the error surface is uniform across the package.
"""
from __future__ import annotations

import numpy as np


class DomainError(ValueError):
    """An argument violates a documented precondition."""


class IntervalTooShort(DomainError):
    """The interval holds fewer than the 8 observations the statistic needs."""


def as_data_matrix(values, *, name: str = "data") -> np.ndarray:
    """Validate and normalize a data matrix.

    Accepts anything array-like. Rows are time points, columns are
    coordinates. A 1-D input is treated as a single-column series.

    Returns a fresh, read-only float64 array so downstream code can share it
    across threads without defensive copies.
    """
    arr = np.array(values, dtype=np.float64, order="C", copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DomainError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DomainError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise DomainError(
            f"{name} contains a non-finite entry at row {bad[0] + 1}, "
            f"column {bad[1] + 1}"
        )
    arr.flags.writeable = False
    return arr


def check_interval(a: int, b: int, n: int, *, min_length: int = 1) -> tuple[int, int]:
    """Validate a 1-based closed interval [a, b] within [1, n]."""
    a, b = int(a), int(b)
    if not (1 <= a < b <= n):
        raise DomainError(f"interval ({a}, {b}) must satisfy 1 <= a < b <= n = {n}")
    if b - a + 1 < min_length:
        raise IntervalTooShort(
            f"interval ({a}, {b}) has length {b - a + 1}, need at least {min_length}"
        )
    return a, b


def check_positive_int(value, name: str) -> int:
    v = int(value)
    if v < 1:
        raise DomainError(f"{name} must be a positive integer, got {value}")
    return v
