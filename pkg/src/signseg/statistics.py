"""Self-normalized change-point statistics over an interval.

For a window [a, b] of length L = b - a + 1 >= 8, the test statistic is

    T(a, b) = max over k in {a+3, ..., b-4} of D(k; a, b)^2 / W_L(k; a, b),

where D is one of the bilinear statistics from ``kernels`` and the
self-normalizer aggregates the same statistic over recursive subwindows:

    W_L(k; a, b) = (1/L) [ sum_{t=a+1}^{k-2} D(t; a, k)^2
                         + sum_{t=k+2}^{b-2} D(t; k+1, b)^2 ].

The engines below produce the whole left-anchored family {D(t; a, k)} at once
through prefix-sum recursions; the right-hand family is the left family of
the time-reversed block, because swapping the roles of (j1, j2) with (j3, j4)
negates both sign arguments and leaves every summand unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import DomainError, IntervalTooShort, as_data_matrix, check_interval

MIN_WINDOW = 8


def _sign_family(x: np.ndarray):
    """Left-anchored sign-statistic family of one block.

    Returns (D, LS2) with D[t, k] = D_sign(t; 0, k) on 0-based local indices
    (zero where t >= k) and LS2[k] = sum_{t=1}^{k-2} D[t, k]^2, the left half
    of every normalizer.

    The inclusion-exclusion identity splits D into four prefix-summable
    pieces; the only super-quadratic work is one batched GEMM per row for the
    pairwise inner products of row-prefixed signs, O(L^3 p) total.
    """
    L, p = x.shape
    diff = x[:, None, :] - x[None, :, :]
    nrm = np.linalg.norm(diff, axis=2)
    tied = nrm == 0.0
    np.copyto(nrm, 1.0, where=tied)
    ss = diff / nrm[:, :, None]

    # grand cross-block sum V(t, k) via the 2-D prefix VS[t, k]
    vs = ss.cumsum(axis=0).cumsum(axis=1)
    vs2 = np.einsum("tkp,tkp->tk", vs, vs)
    vsd = np.einsum("ttp->tp", vs)
    cross = np.einsum("tkp,tp->tk", vs, vsd)
    vdiag2 = np.einsum("tp,tp->t", vsd, vsd)
    vterm = vs2 - 2.0 * cross + vdiag2[:, None]

    # row sums u_j1(t, k) from row-prefixes R; the (t, k) reduction over
    # rows j1 <= t needs the running Gram of the prefixes, one GEMM per row
    r = ss.cumsum(axis=1)
    rn = np.einsum("ijp,ijp->ij", r, r)
    rnc = rn.cumsum(axis=0)
    gram = np.einsum("iap,ibp->iab", r, r).cumsum(axis=0)
    ar = np.arange(L)
    g_tt_k = gram[ar, ar, :]
    uterm = rnc - 2.0 * g_tt_k + np.diag(rnc)[:, None]

    # column sums w_j2(t) from column-prefixes, squared and prefixed over j2
    c = ss.cumsum(axis=0)
    w2 = np.einsum("tjp,tjp->tj", c, c).cumsum(axis=1)
    wterm = w2 - np.diag(w2)[:, None]

    # count of non-tied cross pairs
    tp = tied.astype(np.float64).cumsum(axis=0).cumsum(axis=1)
    pairs = (ar[:, None] + 1.0) * (ar[None, :] - ar[:, None])
    count = pairs - (tp - np.diag(tp)[:, None])

    d = vterm - uterm - wterm + count
    d[ar[:, None] >= ar[None, :]] = 0.0
    ls2 = (d ** 2 * ((ar[:, None] >= 1) & (ar[:, None] <= ar[None, :] - 2))).sum(axis=0)
    return d, ls2


def _mean_family(x: np.ndarray):
    """Left-anchored unsigned family via the Gram-prefix decomposition.

    Same return contract as _sign_family, in O(L^2 p) + O(L^2).
    """
    L, _ = x.shape
    x = x - x.mean(axis=0)
    zs = np.zeros((L + 1, L + 1))
    zs[1:, 1:] = np.tril(x @ x.T, k=-1).cumsum(axis=0).cumsum(axis=1)
    diag = np.diag(zs[1:, 1:])

    ar = np.arange(L)
    t, k = ar[:, None], ar[None, :]
    z_left = diag[:, None]                      # Z over [0..t]
    z_win = diag[None, :] - zs[1:, 1:].T        # Z over [t+1..k] = ZS[k,k] - ZS[k,t]
    z_cross = diag[None, :] - z_left - z_win
    nl = t + 1.0
    nr = (k - t).astype(np.float64)
    d = (
        2.0 * nr * (nr - 1) * z_left
        + 2.0 * nl * (nl - 1) * z_win
        - 2.0 * (nl - 1) * (nr - 1) * z_cross
    )
    d[t >= k] = 0.0
    ls2 = (d ** 2 * ((t >= 1) & (t <= k - 2))).sum(axis=0)
    return d, ls2


_FAMILIES = {"sign": _sign_family, "mean": _mean_family}


def _check_kind(kind: str) -> str:
    if kind not in _FAMILIES:
        raise DomainError(f"kind must be 'sign' or 'mean', got {kind!r}")
    return kind


def _family_pair(block: np.ndarray, kind: str):
    """Forward and reversed family runs for one block."""
    fam = _FAMILIES[kind]
    d_fwd, ls2_fwd = fam(block)
    _, ls2_rev = fam(block[::-1])
    return d_fwd, ls2_fwd, ls2_rev


@dataclass(frozen=True)
class SnStatResult:
    """Outcome of one interval statistic.

    ``ratios[i]`` is the self-normalized ratio at split ``k_grid[i]``;
    ``stat`` is its maximum and ``argmax_k`` the earliest split attaining it.
    ``degenerate`` flags any split where the normalizer vanished while the
    numerator did not (ratio +inf); the 0/0 case is defined as ratio 0.
    """

    stat: float
    argmax_k: int
    ratios: np.ndarray
    kind: str
    interval: tuple[int, int]
    degenerate: bool = False

    @property
    def k_grid(self) -> np.ndarray:
        a, b = self.interval
        return np.arange(a + 3, b - 3)

    def __post_init__(self):
        a, b = self.interval
        expected = (b - 4) - (a + 3) + 1
        if len(self.ratios) != expected:
            raise DomainError(
                f"ratio vector has {len(self.ratios)} entries, expected {expected}"
            )


def sn_statistic(data, a: int = 1, b: int | None = None, kind: str = "sign") -> SnStatResult:
    """Self-normalized sup statistic of ``data`` restricted to [a, b].

    Defaults to the full sample. Needs b - a + 1 >= 8 so that every split in
    {a+3, ..., b-4} leaves both normalizer sums nonempty. Ties in the argmax
    break toward the smallest k for reproducible segmentation.
    """
    x = as_data_matrix(data)
    n = x.shape[0]
    if b is None:
        b = n
    a, b = check_interval(a, b, n)
    L = b - a + 1
    if L < MIN_WINDOW:
        raise IntervalTooShort(f"interval ({a}, {b}) has length {L}; need >= {MIN_WINDOW}")
    _check_kind(kind)

    block = x[a - 1 : b]
    d_fwd, ls2_fwd, ls2_rev = _family_pair(block, kind)

    k_loc = np.arange(3, L - 4)  # local 0-based splits; global k = a + k_loc
    num = d_fwd[k_loc, L - 1]
    w = (ls2_fwd[k_loc] + ls2_rev[L - 2 - k_loc]) / L

    ratios = np.zeros(len(k_loc))
    pos = w > 0.0
    ratios[pos] = num[pos] ** 2 / w[pos]
    bad = (~pos) & (num != 0.0)
    ratios[bad] = np.inf

    best = int(np.argmax(ratios))
    return SnStatResult(
        stat=float(ratios[best]),
        argmax_k=int(a + k_loc[best]),
        ratios=ratios,
        kind=kind,
        interval=(a, b),
        degenerate=bool(bad.any()),
    )


def self_normalizer(data, k: int, a: int = 1, b: int | None = None, kind: str = "sign") -> float:
    """The normalizer W_L(k; a, b) alone, for one admissible split k."""
    x = as_data_matrix(data)
    n = x.shape[0]
    if b is None:
        b = n
    a, b = check_interval(a, b, n)
    L = b - a + 1
    if L < MIN_WINDOW:
        raise IntervalTooShort(f"interval ({a}, {b}) has length {L}; need >= {MIN_WINDOW}")
    if not (a + 3 <= k <= b - 4):
        raise DomainError(f"split k={k} outside admissible range [{a + 3}, {b - 4}]")
    _check_kind(kind)

    block = x[a - 1 : b]
    _, ls2_fwd, ls2_rev = _family_pair(block, kind)
    k_loc = k - a
    return float((ls2_fwd[k_loc] + ls2_rev[L - 2 - k_loc]) / L)


class SnChangePointTest(BaseEstimator):
    """Single change-point test in the scikit-learn estimator idiom.

    Parameters
    ----------
    kind : {"sign", "mean"}
        Which bilinear statistic drives the test. The sign variant is robust
        to heavy tails and strong coordinate dependence.
    level : float
        Rejection level used when a null table is available.
    table_source : object with ``get(n) -> QuantileTable``, optional
        Provider of simulated null tables (e.g. ``limit.TableStore``). When
        omitted, ``fit`` computes the statistic and location but leaves the
        p-value as None.

    Attributes set by fit: ``statistic_``, ``changepoint_``, ``ratios_``,
    ``pvalue_``, ``reject_``, ``n_``.
    """

    def __init__(self, kind: str = "sign", level: float = 0.05, table_source=None):
        self.kind = kind
        self.level = level
        self.table_source = table_source

    def fit(self, X, y=None):
        x = as_data_matrix(X)
        result = sn_statistic(x, kind=self.kind)
        self.n_ = x.shape[0]
        self.result_ = result
        self.statistic_ = result.stat
        self.changepoint_ = result.argmax_k
        self.ratios_ = result.ratios
        if self.table_source is not None:
            from .limit import p_value

            table = self.table_source.get(self.n_)
            self.pvalue_ = p_value(table, self.statistic_)
            self.reject_ = bool(self.pvalue_ < self.level)
        else:
            self.pvalue_ = None
            self.reject_ = None
        return self
