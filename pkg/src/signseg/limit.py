"""Monte Carlo simulation of the fixed-n null law of the sup-ratio statistic.

As the dimension grows with n held fixed, the statistic converges to a
functional of a Gaussian field indexed by window endpoints:

    Q(l/n, m/n) = (sqrt(2)/n) * sum_{l <= j < i <= m} z_ij,

with z_ij i.i.d. standard normal over 1 <= j < i <= n. The limit draws

    sup over k in {4..n-4} of
        n G(k/n; 1/n, 1)^2 /
        [ sum_{t=2}^{k-2} G(t/n; 1/n, k/n)^2 + sum_{t=k+2}^{n-2} G(t/n; (k+1)/n, 1)^2 ]

with G the three-term contrast of Q windows defined in ``g_process``. A
noncentral variant adds a deterministic drift c * delta to sqrt(2) G in every
numerator and denominator term, which is how local alternatives enter.

Simulation is exact (no data is generated in dimension p): each replicate is
one triangular array of normals, evaluated in O(n^2) after 2-D prefix sums.
Replicate r draws from ``stream.substream(r)``, so results are identical no
matter how replicates are chunked across workers.
"""
from __future__ import annotations

import base64
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import DomainError, check_positive_int
from .data import RandomStream

FORMAT_VERSION = 1
DEFAULT_B = 50_000
_SQRT2 = math.sqrt(2.0)


class FormatError(ValueError):
    """A table file is structurally invalid."""


class VersionError(FormatError):
    """A table file was written by an incompatible format version."""


@dataclass(frozen=True)
class NoncentralShift:
    """Drift parameters (c, bstar) of the noncentral limit law.

    ``c`` is the local signal level and ``bstar`` the change fraction; the
    implied change index is k* = floor(n * bstar).
    """

    c: float
    bstar: float

    def __post_init__(self):
        if self.c < 0:
            raise DomainError(f"c must be >= 0, got {self.c}")
        if not (0.0 < self.bstar < 1.0):
            raise DomainError(f"bstar must lie in (0, 1), got {self.bstar}")


class LimitDraw:
    """One replicate's triangular Gaussian array with its 2-D prefix sums.

    ``z[i, j]`` holds z_ij for 1 <= j < i <= n (1-based padding; row/col 0
    unused). Window sums over {l <= j < i <= m} become two prefix lookups.
    """

    def __init__(self, n: int, rng: np.random.Generator):
        n = check_positive_int(n, "n")
        self.n = n
        z = np.zeros((n + 1, n + 1))
        il, jl = np.tril_indices(n + 1, k=-1)
        keep = jl >= 1
        z[il[keep], jl[keep]] = rng.standard_normal(int(keep.sum()))
        self.z = z
        self._cs = z.cumsum(axis=0).cumsum(axis=1)

    def window_sum(self, a: int, b: int) -> float:
        """sum of z_ij over a <= j < i <= b."""
        return float(self._cs[b, b] - (self._cs[b, a - 1] if a >= 1 else 0.0))


def q_process(draw: LimitDraw, a: int, b: int) -> float:
    """Q(a/n, b/n) = (sqrt(2)/n) * window sum of the draw over [a, b]."""
    if not (0 <= a < b <= draw.n):
        raise DomainError(f"need 0 <= a < b <= n={draw.n}, got ({a}, {b})")
    return _SQRT2 / draw.n * draw.window_sum(a, b)


def g_process(draw: LimitDraw, k: int, l: int, m: int) -> float:
    """The endpoint contrast G(k/n; l/n, m/n) of three Q windows."""
    if not (l <= k < m):
        raise DomainError(f"need l <= k < m, got (k={k}; l={l}, m={m})")
    n = draw.n
    return (
        (m - l) / n * (m - k - 1) / n * q_process(draw, l, k)
        + (m - l) / n * (k - l) / n * q_process(draw, k + 1, m)
        - (k - l) / n * (m - k - 1) / n * q_process(draw, l, m)
    )


def delta_shift(n: int, k: int, l: int, m: int, kstar: int) -> float:
    """Deterministic drift delta(k/n; l/n, m/n) of the noncentral law.

    Piecewise in the position of the change index k* relative to the split:
    4 C(k-l+1, 2) C(m-k*, 2) / n^4 when l < k <= k* < m, the mirrored product
    when l < k* < k < m, and 0 otherwise.
    """
    if not (l <= k < m):
        raise DomainError(f"need l <= k < m, got (k={k}; l={l}, m={m})")
    if not (1 <= kstar <= n):
        raise DomainError(f"kstar must lie in 1..{n}, got {kstar}")
    if l < k <= kstar < m:
        return 4.0 * math.comb(k - l + 1, 2) * math.comb(m - kstar, 2) / n**4
    if l < kstar < k < m:
        return 4.0 * math.comb(kstar - l + 1, 2) * math.comb(m - k, 2) / n**4
    return 0.0


@dataclass(frozen=True)
class QuantileTable:
    """Sorted Monte Carlo draws of the limit law for one n.

    Keeping every draw (rather than a quantile grid) gives exact empirical
    p-values at any level; at the default B the file is a few hundred KB.
    """

    n: int
    B: int
    seed: int
    values: np.ndarray
    noncentral: NoncentralShift | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or len(v) != self.B:
            raise DomainError(f"expected {self.B} sorted values, got shape {v.shape}")
        if len(v) and (np.any(np.diff(v) < 0) or v[0] < 0):
            raise DomainError("values must be sorted ascending and nonnegative")
        object.__setattr__(self, "values", v)

    def quantile(self, gamma) -> float | np.ndarray:
        """Empirical gamma-quantile(s), linearly interpolated."""
        q = np.quantile(self.values, gamma)
        return float(q) if np.isscalar(gamma) else q


def p_value(table: QuantileTable, observed: float) -> float:
    """Empirical upper-tail p-value (1 + #{draws >= observed}) / (B + 1)."""
    if table.B < 1:
        raise DomainError("empty table")
    if math.isnan(observed):
        raise DomainError("observed statistic is NaN")
    exceed = int(np.count_nonzero(table.values >= observed))
    return (1 + exceed) / (table.B + 1)


# ---------------------------------------------------------------------------
# batched simulation

def _delta_grids(n: int, kstar: int):
    """Vectorized drift grids: numerator delta(k;1,n), left delta(t;1,k),
    right delta(t;k+1,n), on the same (t, k) layout as the G grids."""
    idx = np.arange(n + 1)
    t, k = np.meshgrid(idx, idx, indexing="ij")

    def comb2(x):
        return np.where(x >= 2, x * (x - 1) / 2.0, 0.0)

    def delta(kk, ll, mm):
        left = 4.0 * comb2(kk - ll + 1) * comb2(mm - kstar) / float(n) ** 4
        right = 4.0 * comb2(kstar - ll + 1) * comb2(mm - kk) / float(n) ** 4
        out = np.where((ll < kk) & (kk <= kstar) & (kstar < mm), left, 0.0)
        return np.where((ll < kstar) & (kstar < kk) & (kk < mm), right, out)

    d_num = delta(idx, 1, n)
    d_left = delta(t, 1, k)
    d_right = delta(t, k + 1, n)
    return d_num, d_left, d_right


def _functional_batch(n: int, zmat: np.ndarray, shift: NoncentralShift | None) -> np.ndarray:
    """Evaluate the sup-ratio functional for a stack of triangular draws.

    ``zmat`` has shape (reps, n+1, n+1) with the strictly-lower-triangular
    normals in 1-based position. Mirrors q_process/g_process exactly (a
    property test pins the two code paths together).
    """
    reps = zmat.shape[0]
    cs = zmat.cumsum(axis=1).cumsum(axis=2)
    diag = cs[:, np.arange(n + 1), np.arange(n + 1)]
    scale = _SQRT2 / n

    idx = np.arange(n + 1)
    t, k = np.meshgrid(idx, idx, indexing="ij")

    # numerator windows: Q(1,k), Q(k+1,n), Q(1,n)
    q_1k = scale * diag
    q_k1n = scale * (cs[:, n, n][:, None] - cs[:, n, :])
    q_1n = scale * cs[:, n, n]
    ks = idx.astype(np.float64)
    g_num = (
        (n - 1) / n * (n - ks - 1) / n * q_1k
        + (n - 1) / n * (ks - 1) / n * q_k1n
        - (ks - 1) / n * (n - ks - 1) / n * q_1n[:, None]
    )

    # left family G(t; 1, k): Q(1,t), Q(t+1,k) = (CS[k,k]-CS[k,t]), Q(1,k)
    q_t1k = scale * (diag[:, None, :] - np.swapaxes(cs, 1, 2))
    g_left = (
        (k - 1) / n * (k - t - 1) / n * (scale * diag)[:, :, None]
        + (k - 1) / n * (t - 1) / n * q_t1k
        - (t - 1) / n * (k - t - 1) / n * (scale * diag)[:, None, :]
    )

    # right family G(t; k+1, n): Q(k+1,t) = (CS[t,t]-CS[t,k]), Q(t+1,n), Q(k+1,n)
    q_k1t = scale * (diag[:, :, None] - cs)
    q_t1n = scale * (cs[:, n, n][:, None] - cs[:, n, :])
    g_right = (
        (n - k - 1) / n * (n - t - 1) / n * q_k1t
        + (n - k - 1) / n * (t - k - 1) / n * q_t1n[:, :, None]
        - (t - k - 1) / n * (n - t - 1) / n * q_k1n[:, None, :]
    )

    if shift is not None:
        kstar = int(math.floor(n * shift.bstar))
        d_num, d_left, d_right = _delta_grids(n, kstar)
        g_num = _SQRT2 * g_num + shift.c * d_num[None, :]
        g_left = _SQRT2 * g_left + shift.c * d_left[None, :, :]
        g_right = _SQRT2 * g_right + shift.c * d_right[None, :, :]

    mask_left = ((t >= 2) & (t <= k - 2)).astype(np.float64)
    mask_right = ((t >= k + 2) & (t <= n - 2)).astype(np.float64)
    lsum = np.einsum("rtk,rtk,tk->rk", g_left, g_left, mask_left)
    rsum = np.einsum("rtk,rtk,tk->rk", g_right, g_right, mask_right)

    kv = np.arange(4, n - 3)
    den = lsum[:, kv] + rsum[:, kv]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = n * g_num[:, kv] ** 2 / den
    ratios = np.where(den > 0, ratios, 0.0)
    return ratios.max(axis=1).reshape(reps)


def _triangular_batch(n: int, streams: list[RandomStream]) -> np.ndarray:
    """Stack each replicate's triangular normals, one substream per replicate."""
    m = n * (n + 1) // 2 - n  # n(n-1)/2 entries
    il, jl = np.tril_indices(n + 1, k=-1)
    keep = jl >= 1
    il, jl = il[keep], jl[keep]
    assert il.size == m
    z = np.zeros((len(streams), n + 1, n + 1))
    for row, stream in enumerate(streams):
        z[row, il, jl] = stream.generator().standard_normal(m)
    return z


def _simulate_range(args) -> np.ndarray:
    n, seed, start, stop, shift, chunk = args
    root = RandomStream(seed)
    out = []
    for lo in range(start, stop, chunk):
        hi = min(lo + chunk, stop)
        z = _triangular_batch(n, [root.substream(r) for r in range(lo, hi)])
        out.append(_functional_batch(n, z, shift))
    return np.concatenate(out) if out else np.empty(0)


def simulate_limit(
    n: int,
    B: int = DEFAULT_B,
    stream: RandomStream | None = None,
    noncentral: NoncentralShift | None = None,
    workers: int = 1,
) -> QuantileTable:
    """Draw B replicates of the fixed-n limit law and return the sorted table.

    Replicate r is a pure function of (stream.seed, r); the worker count only
    affects wall time, never the values. n must be at least 8 (below that, no
    admissible split exists).
    """
    if n < 8:
        raise DomainError(f"n must be >= 8, got {n}")
    B = check_positive_int(B, "B")
    if stream is None:
        stream = RandomStream(0)
    chunk = max(1, min(512, 2_000_000 // (n * n)))
    workers = max(1, int(workers))
    if workers == 1 or B <= chunk:
        draws = _simulate_range((n, stream.seed, 0, B, noncentral, chunk))
    else:
        bounds = np.linspace(0, B, workers + 1, dtype=int)
        tasks = [
            (n, stream.seed, int(lo), int(hi), noncentral, chunk)
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_range, tasks))
        draws = np.concatenate(parts)
    draws.sort()
    return QuantileTable(n=n, B=B, seed=stream.seed, values=draws, noncentral=noncentral)


# ---------------------------------------------------------------------------
# persistence

def save_table(table: QuantileTable, path) -> None:
    """Write a table as versioned JSON with a base64 float64 payload."""
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "sup-ratio-limit-table",
        "n": table.n,
        "B": table.B,
        "seed": table.seed,
        "noncentral": (
            None
            if table.noncentral is None
            else {"c": table.noncentral.c, "bstar": table.noncentral.bstar}
        ),
        "encoding": "base64/float64-le",
        "values": base64.b64encode(
            np.ascontiguousarray(table.values, dtype="<f8").tobytes()
        ).decode("ascii"),
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_table(path) -> QuantileTable:
    """Read a table written by save_table; bit-exact round trip."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: not a valid table file: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise FormatError(f"{path}: missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionError(
            f"{path}: format_version {doc['format_version']} unsupported "
            f"(expected {FORMAT_VERSION})"
        )
    try:
        if doc.get("encoding") == "base64/float64-le":
            values = np.frombuffer(base64.b64decode(doc["values"]), dtype="<f8")
        elif doc.get("encoding") == "plain":
            values = np.asarray(doc["values"], dtype=np.float64)
        else:
            raise FormatError(f"{path}: unknown payload encoding {doc.get('encoding')!r}")
        nc = doc["noncentral"]
        shift = None if nc is None else NoncentralShift(c=nc["c"], bstar=nc["bstar"])
        return QuantileTable(
            n=int(doc["n"]),
            B=int(doc["B"]),
            seed=int(doc["seed"]),
            values=values.copy(),
            noncentral=shift,
        )
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise FormatError(f"{path}: corrupt table payload: {exc}") from exc


class TableStore:
    """Lazily simulated, optionally disk-backed cache of null tables by n.

    A store fully determines its contents from (base_seed, B): the table for
    length n is simulated with seed base_seed + n on first request, saved to
    ``directory`` when one is given, and reused thereafter. This is the
    ``table_source`` expected by the segmenter and the estimators.
    """

    def __init__(self, directory=None, B: int = DEFAULT_B, base_seed: int = 1_000_003,
                 workers: int = 1):
        self.directory = None if directory is None else str(directory)
        self.B = B
        self.base_seed = base_seed
        self.workers = workers
        self._cache: dict[int, QuantileTable] = {}
        if self.directory is not None:
            os.makedirs(self.directory, exist_ok=True)

    def path_for(self, n: int) -> str | None:
        if self.directory is None:
            return None
        return os.path.join(self.directory, f"limit_n{n}_B{self.B}.json")

    def get(self, n: int) -> QuantileTable:
        n = int(n)
        if n in self._cache:
            return self._cache[n]
        path = self.path_for(n)
        if path is not None and os.path.exists(path):
            table = load_table(path)
        else:
            table = simulate_limit(
                n, self.B, RandomStream(self.base_seed + n), workers=self.workers
            )
            if path is not None:
                save_table(table, path)
        self._cache[n] = table
        return table
