"""Spatial signs and the two bilinear change-point statistics.

The workhorse quantity is, for a split k of the window [l, m],

    D_sign(k; l, m) = sum over j1 != j3 in [l, k], j2 != j4 in [k+1, m] of
                      S(Y_j1 - Y_j2)' S(Y_j3 - Y_j4),

where S(x) = x / ||x|| (zero for the zero vector), together with its unsigned
counterpart D_mean built from raw differences. Both have literal quadruple-sum
oracles here (for tests) and fast paths: an inclusion-exclusion identity over
a pairwise sign cache, and a closed-form decomposition over a Gram-prefix
table. All indices in this module are 1-based, matching the package API.
"""
from __future__ import annotations

import numpy as np

from ._validation import DomainError, as_data_matrix
from .data import SegmentTriple


def spatial_sign(x) -> np.ndarray:
    """Unit-norm direction of ``x``; the zero vector maps to itself."""
    x = np.asarray(x, dtype=np.float64)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        return np.zeros_like(x)
    return x / nrm


class PairwiseSignCache:
    """All C(n,2) pairwise spatial signs of one dataset, packed row-major.

    Stores s_ij = S(Y_i - Y_j) for i < j only; the opposite orientation is
    recovered by antisymmetry (s_ji = -s_ij) and is never materialized. Pairs
    of exactly equal rows (||Y_i - Y_j|| = 0 in float64, no epsilon) carry the
    zero vector and are tracked in ``zero_pairs`` so the counting term of the
    inclusion-exclusion identity can exclude them.

    Immutable after construction; queries are read-only and thread-safe.
    """

    def __init__(self, data):
        x = as_data_matrix(data)
        n, p = x.shape
        if n < 2:
            raise DomainError("need at least two rows to form pairs")
        iu, ju = np.triu_indices(n, k=1)
        diff = x[iu] - x[ju]
        nrm = np.linalg.norm(diff, axis=1)
        tied = nrm == 0.0
        safe = np.where(tied, 1.0, nrm)
        self._signs = diff / safe[:, None]
        self._tied = tied
        self.n = n
        self.p = p
        self.zero_pairs = frozenset(
            (int(i) + 1, int(j) + 1) for i, j in zip(iu[tied], ju[tied])
        )

    def _index(self, i: int, j: int) -> int:
        # packed offset of pair (i, j) with 1 <= i < j <= n
        i0, j0 = i - 1, j - 1
        return i0 * (2 * self.n - i0 - 1) // 2 + (j0 - i0 - 1)

    def sign(self, i: int, j: int) -> np.ndarray:
        """S(Y_i - Y_j) for any i != j, via antisymmetry for i > j."""
        if not (1 <= i <= self.n and 1 <= j <= self.n) or i == j:
            raise DomainError(f"pair ({i}, {j}) out of range for n={self.n}")
        if i < j:
            return self._signs[self._index(i, j)]
        return -self._signs[self._index(j, i)]

    def _block(self, left: np.ndarray, right: np.ndarray):
        """Sign vectors and tie flags for all (i in left) x (j in right), i < j."""
        idx = (left[:, None] - 1) * (2 * self.n - left[:, None]) // 2 + (
            right[None, :] - left[:, None] - 1
        )
        return self._signs[idx], self._tied[idx]


def _check_triple(data_n: int, triple: SegmentTriple) -> SegmentTriple:
    triple.validate_against(data_n)
    return triple


def d_sign_oracle(data, triple: SegmentTriple) -> float:
    """The sign statistic by literal enumeration of all quadruples.

    Cost O((k-l+1)^2 (m-k)^2 p); intended only as the ground truth in tests.
    """
    x = as_data_matrix(data)
    t = _check_triple(x.shape[0], triple)
    left = range(t.l - 1, t.k)
    right = range(t.k, t.m)
    total = 0.0
    for j1 in left:
        for j3 in left:
            if j1 == j3:
                continue
            for j2 in right:
                for j4 in right:
                    if j2 == j4:
                        continue
                    total += float(
                        spatial_sign(x[j1] - x[j2]) @ spatial_sign(x[j3] - x[j4])
                    )
    return total


def d_mean_oracle(data, triple: SegmentTriple) -> float:
    """The unsigned statistic by literal enumeration; tests only."""
    x = as_data_matrix(data)
    t = _check_triple(x.shape[0], triple)
    left = range(t.l - 1, t.k)
    right = range(t.k, t.m)
    total = 0.0
    for j1 in left:
        for j3 in left:
            if j1 == j3:
                continue
            for j2 in right:
                for j4 in right:
                    if j2 == j4:
                        continue
                    total += float((x[j1] - x[j2]) @ (x[j3] - x[j4]))
    return total


def d_sign_fast(cache: PairwiseSignCache, triple: SegmentTriple) -> float:
    """The sign statistic via inclusion-exclusion over the pairwise cache.

    With s_{j1 j2} the cross-block sign vectors, V their grand sum, u_{j1}
    the per-left-row sums and w_{j2} the per-right-column sums,

        D = ||V||^2 - sum ||u_{j1}||^2 - sum ||w_{j2}||^2 + N,

    where N counts the non-tied cross pairs (each contributes a unit-norm
    vector to the doubly-diagonal term). Exactly equals the oracle.
    """
    t = _check_triple(cache.n, triple)
    left = np.arange(t.l, t.k + 1)
    right = np.arange(t.k + 1, t.m + 1)
    block, tied = cache._block(left, right)
    v = block.sum(axis=(0, 1))
    u = block.sum(axis=1)
    w = block.sum(axis=0)
    n_untied = block.shape[0] * block.shape[1] - int(tied.sum())
    return float(v @ v - np.einsum("ip,ip->", u, u) - np.einsum("jp,jp->", w, w) + n_untied)


class MeanStatTable:
    """O(1) unsigned-statistic queries after an O(n^2 p) Gram precomputation.

    Builds prefix sums of the strictly-lower-triangular Gram matrix so that
    Z(l, m) = sum_{l <= j < i <= m} Y_i'Y_j is a two-entry lookup, then
    evaluates the exact decomposition

        D(k; l, m) = 2(m-k)(m-k-1) Z(l, k) + 2(k-l+1)(k-l) Z(k+1, m)
                     - 2(k-l)(m-k-1) [Z(l, m) - Z(l, k) - Z(k+1, m)].

    Rows are demeaned before the Gram product; the statistic is exactly
    translation invariant, and centering keeps the prefix sums conditioned
    when the data carries large mean shifts.
    """

    def __init__(self, data):
        x = as_data_matrix(data)
        x = x - x.mean(axis=0)
        self.n = x.shape[0]
        gram = np.tril(x @ x.T, k=-1)
        zs = np.zeros((self.n + 1, self.n + 1))
        zs[1:, 1:] = gram.cumsum(axis=0).cumsum(axis=1)
        self._zs = zs

    def z(self, l: int, m: int) -> float:
        """Z(l, m) = sum of Y_i'Y_j over l <= j < i <= m (1-based, inclusive)."""
        if not (1 <= l <= m <= self.n):
            raise DomainError(f"window ({l}, {m}) out of range for n={self.n}")
        return float(self._zs[m, m] - self._zs[m, l - 1])

    def d_value(self, triple: SegmentTriple) -> float:
        t = _check_triple(self.n, triple)
        k, l, m = t.k, t.l, t.m
        z_left = self.z(l, k)
        z_right = self.z(k + 1, m)
        z_cross = self.z(l, m) - z_left - z_right
        nl = k - l + 1
        nr = m - k
        return float(
            2.0 * nr * (nr - 1) * z_left
            + 2.0 * nl * (nl - 1) * z_right
            - 2.0 * (nl - 1) * (nr - 1) * z_cross
        )


def d_mean(data, triple: SegmentTriple) -> float:
    """The unsigned statistic for one triple (builds the Gram table per call).

    For repeated queries on the same data, build a MeanStatTable once.
    """
    return MeanStatTable(data).d_value(triple)
