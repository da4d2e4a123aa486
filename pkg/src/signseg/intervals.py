"""Deterministic multi-scale interval collections for segmentation.

Layer k of the collection holds n_k = 2*ceil((1/alpha)^(k-1)) - 1 intervals
of common length l_k = 10*ceil(n*alpha^(k-1)/10), evenly shifted by
s_k = (n - l_k)/(n_k - 1). Rounding lengths up to multiples of 10 keeps the
set of distinct lengths small, so the null tables the segmenter needs can be
simulated once per length and reused forever.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from ._validation import DomainError

MIN_LENGTH = 8  # intervals shorter than this cannot carry the statistic


def _fuzz_ceil(v: float) -> int:
    """Ceiling that forgives floating-point drift just above an integer.

    Layer scales are computed as float powers, and a value meant to land
    exactly on an integer can come out one ulp high (alpha = 2^-1/2 squared
    lands a hair above 1/2, which would turn the n=120 length-60 layer into
    length 70 and lose its evenly placed windows). Relative slack of 1e-12
    is far above the compounding error of the powers and far below the gap
    to any genuine non-boundary value at realistic n.
    """
    c = math.ceil(v)
    if c - 1 > 0 and v <= (c - 1) * (1.0 + 1e-12):
        return c - 1
    return c


@dataclass(frozen=True)
class Layer:
    """Bookkeeping for one decay layer (before dedup and clipping)."""

    index: int
    count: int
    length: int
    shift: float


@dataclass(frozen=True)
class SeededIntervalSet:
    """Deduplicated 1-based closed intervals [a, b], plus per-layer metadata."""

    n: int
    alpha: float
    intervals: tuple[tuple[int, int], ...]
    layers: tuple[Layer, ...]
    layer_of: dict[tuple[int, int], int]

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def within(self, a: int, b: int) -> list[tuple[int, int]]:
        """Members lying fully inside [a, b] (the search pool of a segment)."""
        return [(ai, bi) for ai, bi in self.intervals if ai >= a and bi <= b]

    def lengths(self) -> list[int]:
        """Distinct interval lengths, ascending (the null tables needed)."""
        return sorted({b - a + 1 for a, b in self.intervals})

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["a", "b", "layer"])
            for a, b in self.intervals:
                writer.writerow([a, b, self.layer_of[(a, b)]])


def seeded_intervals(n: int, alpha: float) -> SeededIntervalSet:
    """Generate the deterministic interval collection for sample size n.

    alpha in [1/2, 1) controls how slowly lengths decay (closer to 1 means
    more layers and denser coverage). Layer 1 is the full interval (1, n);
    any layer whose nominal length reaches n collapses to the same. Intervals
    shorter than 8 are dropped, duplicates keep their first occurrence.
    """
    if n < MIN_LENGTH:
        raise DomainError(f"n must be >= {MIN_LENGTH}, got {n}")
    if not (0.5 <= alpha < 1.0):
        raise DomainError(f"alpha must lie in [0.5, 1), got {alpha}")

    depth = math.ceil(math.log(n) / math.log(1.0 / alpha))
    depth = max(depth, 1)
    seen: dict[tuple[int, int], int] = {}
    layers = []
    for k in range(1, depth + 1):
        count = 2 * _fuzz_ceil((1.0 / alpha) ** (k - 1)) - 1
        length = 10 * _fuzz_ceil(n * alpha ** (k - 1) / 10.0)
        if length >= n:
            count, length, shift = 1, n, 0.0
        else:
            shift = (n - length) / (count - 1)
        layers.append(Layer(index=k, count=count, length=length, shift=shift))
        if length < MIN_LENGTH:
            continue
        for i in range(1, count + 1):
            a = 1 + math.floor((i - 1) * shift)
            interval = (a, a + length - 1)
            if interval not in seen:
                seen[interval] = k
    return SeededIntervalSet(
        n=n,
        alpha=alpha,
        intervals=tuple(seen),
        layers=tuple(layers),
        layer_of=dict(seen),
    )
