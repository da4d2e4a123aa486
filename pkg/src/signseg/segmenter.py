"""Recursive multiple change-point estimation over seeded intervals.

The procedure on a segment (a, b): gather every seeded interval fully inside
it, compute each interval's sup-ratio statistic and its p-value against the
simulated null law for that interval's length, and take the interval with
the smallest p-value (ties: shorter interval, then smaller left endpoint).
If that p-value clears the threshold, the split maximizing the interval's SN
ratio becomes a change point and the two flanking segments are processed the
same way. Interval statistics depend only on the data, so they are computed
once per dataset and shared across the whole recursion.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_data_matrix
from .intervals import MIN_LENGTH, SeededIntervalSet, seeded_intervals
from .limit import TableStore, p_value
from .statistics import _check_kind, sn_statistic

DEFAULT_ZETA_P = 0.001
DEFAULT_ALPHA = 2.0 ** -0.5


@dataclass(frozen=True)
class SegmenterConfig:
    """Tuning knobs of the recursive search.

    table_source must provide ``get(length) -> QuantileTable``; a fresh
    in-memory TableStore is created when omitted (correct but slow on first
    use, since tables are simulated on demand).
    """

    zeta_p: float = DEFAULT_ZETA_P
    alpha: float = DEFAULT_ALPHA
    kind: str = "sign"
    table_source: object | None = None

    def __post_init__(self):
        if not (0.0 < self.zeta_p < 1.0):
            raise ValueError(f"zeta_p must lie in (0, 1), got {self.zeta_p}")
        _check_kind(self.kind)


@dataclass(frozen=True)
class Detection:
    """One accepted change point and the interval evidence behind it."""

    location: int
    p_value: float
    statistic: float
    interval: tuple[int, int]
    segment: tuple[int, int]


@dataclass(frozen=True)
class ChangePointResult:
    """Estimated change points, ascending, with per-detection records."""

    n: int
    m_hat: int
    locations: tuple[int, ...]
    detections: tuple[Detection, ...]
    kind: str
    zeta_p: float
    alpha: float

    def labels(self) -> np.ndarray:
        """Segment id (0-based) of each time point 1..n."""
        locs = np.asarray(self.locations)
        return np.searchsorted(locs, np.arange(1, self.n + 1), side="left")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["location", "p_value", "interval_a", "interval_b"])
            for det in sorted(self.detections, key=lambda d: d.location):
                writer.writerow([det.location, repr(det.p_value), *det.interval])

    def to_json(self, path) -> None:
        doc = {
            "n": self.n,
            "config": {"zeta_p": self.zeta_p, "alpha": self.alpha, "kind": self.kind},
            "m_hat": self.m_hat,
            "locations": list(self.locations),
            "detections": [
                {
                    "location": det.location,
                    "p_value": det.p_value,
                    "statistic": det.statistic,
                    "interval": list(det.interval),
                    "segment": list(det.segment),
                }
                for det in self.detections
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)


@dataclass(frozen=True)
class _Candidate:
    interval: tuple[int, int]
    p_value: float
    statistic: float
    argmax_k: int


def order_candidates(candidates):
    """Deterministic priority: smallest p-value, then shorter interval, then
    smaller left endpoint. Makes the recursion reproducible under exact
    p-value ties (common when two intervals share a table and both exceed
    every simulated draw)."""
    return sorted(
        candidates,
        key=lambda c: (c.p_value, c.interval[1] - c.interval[0], c.interval[0]),
    )


class _IntervalEvaluator:
    """Per-dataset lazy cache of interval statistics and p-values."""

    def __init__(self, x, kind, table_source):
        self.x = x
        self.kind = kind
        self.tables = table_source
        self._cache: dict[tuple[int, int], _Candidate] = {}

    def get(self, interval: tuple[int, int]) -> _Candidate:
        cand = self._cache.get(interval)
        if cand is None:
            a, b = interval
            res = sn_statistic(self.x, a, b, kind=self.kind)
            table = self.tables.get(b - a + 1)
            cand = _Candidate(
                interval=interval,
                p_value=p_value(table, res.stat),
                statistic=res.stat,
                argmax_k=res.argmax_k,
            )
            self._cache[interval] = cand
        return cand


def segment(data, config: SegmenterConfig | None = None) -> ChangePointResult:
    """Run the recursive change-point search over the whole series."""
    if config is None:
        config = SegmenterConfig()
    x = as_data_matrix(data)
    n = x.shape[0]
    table_source = config.table_source or TableStore()

    detections: list[Detection] = []
    if n >= MIN_LENGTH:
        pool = seeded_intervals(n, config.alpha)
        evaluator = _IntervalEvaluator(x, config.kind, table_source)
        _search(1, n, pool, evaluator, config.zeta_p, detections)

    detections.sort(key=lambda d: d.location)
    return ChangePointResult(
        n=n,
        m_hat=len(detections),
        locations=tuple(d.location for d in detections),
        detections=tuple(detections),
        kind=config.kind,
        zeta_p=config.zeta_p,
        alpha=config.alpha,
    )


def _search(a, b, pool: SeededIntervalSet, evaluator, zeta_p, out):
    if b - a + 1 < MIN_LENGTH:
        return
    members = pool.within(a, b)
    if not members:
        return
    best = order_candidates(evaluator.get(iv) for iv in members)[0]
    if best.p_value >= zeta_p:
        return
    k = best.argmax_k
    out.append(
        Detection(
            location=k,
            p_value=best.p_value,
            statistic=best.statistic,
            interval=best.interval,
            segment=(a, b),
        )
    )
    _search(a, k, pool, evaluator, zeta_p, out)
    _search(k + 1, b, pool, evaluator, zeta_p, out)


class SbsSegmenter(BaseEstimator):
    """Multiple change-point estimator in the scikit-learn idiom.

    Parameters mirror SegmenterConfig. ``fit`` stores the detected change
    points; ``fit_predict`` (and ``predict``) return the 0-based segment
    label of every row.
    """

    def __init__(
        self,
        kind: str = "sign",
        zeta_p: float = DEFAULT_ZETA_P,
        alpha: float = DEFAULT_ALPHA,
        table_source=None,
    ):
        self.kind = kind
        self.zeta_p = zeta_p
        self.alpha = alpha
        self.table_source = table_source

    def fit(self, X, y=None):
        result = segment(
            X,
            SegmenterConfig(
                zeta_p=self.zeta_p,
                alpha=self.alpha,
                kind=self.kind,
                table_source=self.table_source,
            ),
        )
        self.result_ = result
        self.changepoints_ = np.asarray(result.locations, dtype=int)
        self.n_changepoints_ = result.m_hat
        self.labels_ = result.labels()
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def predict(self, X):
        return self.fit_predict(X)
