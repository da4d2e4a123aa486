"""Synthetic data generators, experiment runners, and evaluation metrics.

The generator cases cover the regimes the tests are designed for:

    gauss_iid   independent N(0, 1) coordinates
    t5_iid      multivariate t, 5 df, identity scale matrix
    t3_iid      multivariate t, 3 df, identity scale matrix
    ar1_gauss   coordinates follow a stationary AR(1), N(0,1)/2 innovations
    ar1_t5      as above, innovations are a multivariate-t5 row divided by 2
    rsrm_gauss  the ar1_gauss vector divided by one Exp(1) scalar per row
    rsrm_t5     the ar1_t5 vector divided by one Exp(1) scalar per row

Rows are always i.i.d. across time; dependence lives inside the coordinate
index. The t rows keep the usual multivariate-t construction: one chi-square
mixing scalar per row, so coordinates are uncorrelated but scale-coupled and
marginals are t with scale 1, not variance 1. The rsrm cases push the same
idea further with an Exp(1) scale, which is what breaks mean-based statistics
while the sign-based ones stay calibrated.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from ._validation import DomainError, check_positive_int
from .data import RandomStream
from .intervals import seeded_intervals
from .limit import TableStore
from .segmenter import DEFAULT_ALPHA, SegmenterConfig, segment
from .statistics import sn_statistic

CASES = ("gauss_iid", "t5_iid", "t3_iid", "ar1_gauss", "ar1_t5", "rsrm_gauss", "rsrm_t5")
_AR_WARMUP = 64  # rho^64 is below float64 noise for |rho| <= 0.7


@dataclass(frozen=True)
class DgpConfig:
    """One data-generating configuration.

    ``shifts`` holds (kstar, delta) pairs: delta is added to every row after
    time kstar. A single change at mid-sample with a dense or sparse delta
    reproduces the standard single-shift alternatives; several pairs give
    multiple change-point models.
    """

    case: str
    n: int
    p: int
    rho: float = 0.7
    shifts: tuple[tuple[int, np.ndarray], ...] = ()

    def __post_init__(self):
        if self.case not in CASES:
            raise DomainError(f"unknown case {self.case!r}; choose from {CASES}")
        check_positive_int(self.n, "n")
        check_positive_int(self.p, "p")
        if not (-1.0 < self.rho < 1.0):
            raise DomainError(f"rho must lie in (-1, 1), got {self.rho}")
        normalized = []
        for kstar, delta in self.shifts:
            kstar = int(kstar)
            if not (1 <= kstar <= self.n - 1):
                raise DomainError(f"change index {kstar} outside 1..{self.n - 1}")
            delta = np.asarray(delta, dtype=np.float64)
            if delta.shape != (self.p,):
                raise DomainError(f"shift vector has shape {delta.shape}, need ({self.p},)")
            normalized.append((kstar, delta))
        normalized.sort(key=lambda pair: pair[0])
        object.__setattr__(self, "shifts", tuple(normalized))

    def true_changepoints(self) -> tuple[int, ...]:
        return tuple(kstar for kstar, _ in self.shifts)


def dense_shift(p: int, scale: float = 1.0) -> np.ndarray:
    """The spread-out alternative: scale / sqrt(p) in every coordinate."""
    return np.full(p, scale / math.sqrt(p))


def sparse_shift(p: int, n_coords: int = 2, scale: float = 1.0) -> np.ndarray:
    """The concentrated alternative: scale in the first n_coords coordinates."""
    delta = np.zeros(p)
    delta[:n_coords] = scale
    return delta


def single_change_config(
    case: str, n: int, p: int, alternative: str = "null", rho: float = 0.7
) -> DgpConfig:
    """Null, dense, or sparse single mid-sample shift at kstar = n/2."""
    if alternative == "null":
        shifts = ()
    elif alternative == "dense":
        shifts = ((n // 2, dense_shift(p)),)
    elif alternative == "sparse":
        shifts = ((n // 2, sparse_shift(p)),)
    else:
        raise DomainError(f"alternative must be null/dense/sparse, got {alternative!r}")
    return DgpConfig(case=case, n=n, p=p, rho=rho, shifts=shifts)


def three_change_config(
    case: str, h: float, d: int, n: int = 120, p: int = 50, rho: float = 0.3
) -> DgpConfig:
    """Three equally spaced changes with alternating mean levels 0, theta, 0, theta.

    theta = h/sqrt(d) on the first d coordinates, so every change has squared
    norm h^2 regardless of d; d = p is the dense regime, small d the sparse
    one, h the signal strength. The h^2 calibration is deliberate: with
    squared norm h instead, an oracle two-sample z-test on the best seeded
    window would top out near 50% power at the default threshold for h=2.5,
    far below the accuracy the reference results report, so h must act on
    the per-coordinate scale.
    """
    if d > p:
        raise DomainError(f"d={d} exceeds p={p}")
    theta = np.zeros(p)
    theta[:d] = h / math.sqrt(d)
    marks = (n // 4, n // 2, 3 * n // 4)
    return DgpConfig(
        case=case, n=n, p=p, rho=rho,
        shifts=((marks[0], theta), (marks[1], -theta), (marks[2], theta)),
    )


def _ar1_rows(rng, n, p, rho, innovations):
    if innovations == "gauss":
        eps = rng.standard_normal((n, p + _AR_WARMUP)) / 2.0
    else:
        # a multivariate-t5 row halved: the whole row shares one chi-square
        # mixing scalar, the heavy-tailed analogue of the halved gauss row
        z = rng.standard_normal((n, p + _AR_WARMUP))
        chi = rng.chisquare(5, size=n)
        eps = z / np.sqrt(chi / 5.0)[:, None] / 2.0
    path = lfilter([1.0], [1.0, -rho], eps, axis=1)
    return path[:, _AR_WARMUP:]


def draw_dgp(config: DgpConfig, stream: RandomStream) -> np.ndarray:
    """One dataset from the configuration, keyed entirely by the stream."""
    rng = stream.generator()
    n, p = config.n, config.p
    case = config.case
    if case == "gauss_iid":
        x = rng.standard_normal((n, p))
    elif case in ("t5_iid", "t3_iid"):
        nu = 5 if case == "t5_iid" else 3
        z = rng.standard_normal((n, p))
        chi = rng.chisquare(nu, size=n)
        x = z / np.sqrt(chi / nu)[:, None]
    elif case in ("ar1_gauss", "ar1_t5"):
        x = _ar1_rows(rng, n, p, config.rho, "gauss" if case == "ar1_gauss" else "t5")
    else:  # rsrm_gauss / rsrm_t5
        x = _ar1_rows(rng, n, p, config.rho, "gauss" if case == "rsrm_gauss" else "t5")
        x = x / rng.standard_exponential(n)[:, None]
    for kstar, delta in config.shifts:
        x[kstar:] += delta
    return x


# ---------------------------------------------------------------------------
# metrics

def ari(changes_a, changes_b, n: int) -> float:
    """Adjusted Rand index between the segmentations two change-point sets
    induce on {1, ..., n}. 1 means identical partitions; 0 is the chance
    level. Computed from the segment contingency table with the standard
    expected-index correction."""
    la = _labels_from_changes(changes_a, n)
    lb = _labels_from_changes(changes_b, n)
    cont = np.zeros((la.max() + 1, lb.max() + 1), dtype=np.int64)
    np.add.at(cont, (la, lb), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = comb2(cont).sum()
    sum_rows = comb2(cont.sum(axis=1)).sum()
    sum_cols = comb2(cont.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_rows * sum_cols / total
    maximum = 0.5 * (sum_rows + sum_cols)
    if maximum == expected:
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def _labels_from_changes(changes, n: int) -> np.ndarray:
    locs = np.asarray(sorted(int(c) for c in changes), dtype=int)
    if len(locs) and (locs[0] < 1 or locs[-1] >= n):
        raise DomainError(f"change points must lie in 1..{n - 1}")
    if len(np.unique(locs)) != len(locs):
        raise DomainError("change points must be distinct")
    return np.searchsorted(locs, np.arange(1, n + 1), side="left")


def mse_mhat(outcomes) -> float:
    """Mean squared error of the estimated change count over replicates."""
    pairs = list(outcomes)
    if not pairs:
        raise DomainError("no outcomes")
    return float(np.mean([(m_hat - m) ** 2 for m_hat, m in pairs]))


@dataclass(frozen=True)
class HillEstimate:
    """Left/right tail-index estimates; NaN and a False flag when undefined.

    An estimate is defined only when every log ratio is finite and positive
    (no mixed signs in the relevant order statistics) and the mean log is
    strictly positive, so defined values are always nonnegative.
    """

    k: int
    left: float
    right: float
    left_defined: bool
    right_defined: bool


def hill(series, k: int) -> HillEstimate:
    """Hill tail-index estimators from the k extreme order statistics.

    Left tail uses the k smallest over the (k+1)-th smallest; right tail the
    k largest over the (k+1)-th largest. Values below ~3 signal tails too
    heavy for mean-based inference.
    """
    y = np.asarray(series, dtype=np.float64).ravel()
    if len(y) < 2:
        raise DomainError("series must hold at least two values")
    if not np.all(np.isfinite(y)):
        raise DomainError("series contains non-finite values")
    k = int(k)
    if not (1 <= k < len(y)):
        raise DomainError(f"k must lie in 1..{len(y) - 1}, got {k}")
    ys = np.sort(y)

    left, left_ok = _hill_one_tail(ys[:k], ys[k])
    right, right_ok = _hill_one_tail(ys[-k:], ys[len(y) - k - 1])
    return HillEstimate(k=k, left=left, right=right,
                        left_defined=left_ok, right_defined=right_ok)


def _hill_one_tail(extremes, anchor):
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = extremes / anchor
        if np.any(~np.isfinite(ratios)) or np.any(ratios <= 0.0):
            return float("nan"), False
        mean_log = float(np.mean(np.log(ratios)))
    if mean_log <= 0.0:
        return float("nan"), False
    return 1.0 / mean_log, True


# ---------------------------------------------------------------------------
# experiment runners

@dataclass(frozen=True)
class ExperimentReport:
    """Flat record of one experiment configuration's results."""

    name: str
    replicates: int
    seed: int
    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    def row(self) -> dict:
        out = {"experiment": self.name, "replicates": self.replicates, "seed": self.seed}
        out.update(self.config)
        out.update(self.metrics)
        return out


def _reject_count(args) -> int:
    config, kind, critical, seed, lo, hi = args
    root = RandomStream(seed)
    count = 0
    for r in range(lo, hi):
        x = draw_dgp(config, root.substream(r))
        if sn_statistic(x, kind=kind).stat > critical:
            count += 1
    return count


def size_power_experiment(
    config: DgpConfig,
    kind: str = "sign",
    limit_kind: str = "fixed_n",
    level: float = 0.05,
    replicates: int = 1000,
    stream: RandomStream | None = None,
    table_source: TableStore | None = None,
    workers: int = 1,
) -> ExperimentReport:
    """Empirical rejection rate of the chosen statistic at the chosen level.

    ``fixed_n`` calibrates against the null table for this exact n;
    ``sequential_proxy`` uses the n = 200 table as a stand-in for the
    large-n limit (flagged in the report, since for small n it is known to
    over-reject).
    """
    if stream is None:
        stream = RandomStream(0)
    if table_source is None:
        table_source = TableStore()
    if limit_kind == "fixed_n":
        table = table_source.get(config.n)
    elif limit_kind == "sequential_proxy":
        table = table_source.get(200)
    else:
        raise DomainError(f"limit_kind must be fixed_n or sequential_proxy, got {limit_kind!r}")
    critical = table.quantile(1.0 - level)

    replicates = check_positive_int(replicates, "replicates")
    workers = max(1, int(workers))
    if workers == 1:
        rejections = _reject_count((config, kind, critical, stream.seed, 0, replicates))
    else:
        bounds = np.linspace(0, replicates, workers + 1, dtype=int)
        tasks = [
            (config, kind, critical, stream.seed, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rejections = sum(pool.map(_reject_count, tasks))

    return ExperimentReport(
        name="size_power",
        replicates=replicates,
        seed=stream.seed,
        config={
            "case": config.case,
            "n": config.n,
            "p": config.p,
            "kind": kind,
            "limit": limit_kind,
            "level": level,
            "alternative": "shift" if config.shifts else "null",
        },
        metrics={"rejection_rate": rejections / replicates},
    )


def _segment_outcomes(args):
    config, seg_kind, zeta_p, alpha, table_source, seed, lo, hi = args
    root = RandomStream(seed)
    seg_config = SegmenterConfig(
        zeta_p=zeta_p, alpha=alpha, kind=seg_kind, table_source=table_source
    )
    truth = config.true_changepoints()
    rows = []
    for r in range(lo, hi):
        x = draw_dgp(config, root.substream(r))
        result = segment(x, seg_config)
        rows.append((result.m_hat, ari(result.locations, truth, config.n)))
    return rows


def segmentation_experiment(
    config: DgpConfig,
    kind: str = "sign",
    zeta_p: float = 0.001,
    alpha: float = DEFAULT_ALPHA,
    replicates: int = 100,
    stream: RandomStream | None = None,
    table_source: TableStore | None = None,
    workers: int = 1,
) -> ExperimentReport:
    """Segmentation accuracy over replicated multi-change datasets.

    Reports the histogram of m_hat - m (binned as <-1, -1, 0, 1, >1), the
    MSE of m_hat, and the mean adjusted Rand index against the truth.
    """
    if not config.shifts:
        raise DomainError("segmentation experiment needs a model with changes")
    if stream is None:
        stream = RandomStream(0)
    if table_source is None:
        table_source = TableStore()
    # warm the length cache once so worker processes inherit files, not work
    for length in seeded_intervals(config.n, alpha).lengths():
        table_source.get(length)

    replicates = check_positive_int(replicates, "replicates")
    workers = max(1, int(workers))
    if workers == 1:
        rows = _segment_outcomes(
            (config, kind, zeta_p, alpha, table_source, stream.seed, 0, replicates)
        )
    else:
        bounds = np.linspace(0, replicates, workers + 1, dtype=int)
        tasks = [
            (config, kind, zeta_p, alpha, table_source, stream.seed, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [row for part in pool.map(_segment_outcomes, tasks) for row in part]

    m = len(config.true_changepoints())
    m_hats = np.array([m_hat for m_hat, _ in rows])
    aris = np.array([a for _, a in rows])
    diffs = m_hats - m
    histogram = {
        "lt_m1": int(np.sum(diffs < -1)),
        "m1": int(np.sum(diffs == -1)),
        "zero": int(np.sum(diffs == 0)),
        "p1": int(np.sum(diffs == 1)),
        "gt_p1": int(np.sum(diffs > 1)),
    }
    return ExperimentReport(
        name="segmentation",
        replicates=replicates,
        seed=stream.seed,
        config={
            "case": config.case,
            "n": config.n,
            "p": config.p,
            "kind": kind,
            "zeta_p": zeta_p,
            "alpha": alpha,
            "m_true": m,
        },
        metrics={
            "frac_exact": float(np.mean(diffs == 0)),
            "mse_mhat": mse_mhat(zip(m_hats.tolist(), [m] * len(rows))),
            "ari_mean": float(np.mean(aris)),
            **histogram,
        },
    )
