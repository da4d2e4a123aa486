import numpy as np
import pytest

from signseg import (
    DomainError,
    MeanStatTable,
    PairwiseSignCache,
    SegmentTriple,
    d_mean,
    d_mean_oracle,
    d_sign_fast,
    d_sign_oracle,
    spatial_sign,
)


def all_triples(n):
    for l in range(1, n):
        for m in range(l + 3, n + 1):
            for k in range(l + 1, m - 1):
                yield SegmentTriple(k, l, m)


def test_spatial_sign_examples():
    assert np.allclose(spatial_sign(np.array([3.0, 4.0])), [0.6, 0.8])
    assert np.array_equal(spatial_sign(np.zeros(5)), np.zeros(5))
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.standard_normal(6)
        assert np.linalg.norm(spatial_sign(v)) == pytest.approx(1.0)


def test_hand_value_two_vs_two():
    # one coordinate, values 0,0,1,1 split in the middle: every cross pair
    # has sign product 1 and there are 2*2 ordered combinations -> 4
    y = np.array([[0.0], [0.0], [1.0], [1.0]])
    tr = SegmentTriple(2, 1, 4)
    assert d_sign_oracle(y, tr) == 4.0
    assert d_sign_fast(PairwiseSignCache(y), tr) == 4.0
    assert d_mean(y, tr) == 4.0
    assert d_mean_oracle(y, tr) == 4.0


def test_fast_sign_matches_oracle_random():
    rng = np.random.default_rng(1)
    for _ in range(5):
        n = int(rng.integers(7, 11))
        p = int(rng.integers(1, 5))
        y = rng.standard_normal((n, p))
        cache = PairwiseSignCache(y)
        for tr in all_triples(n):
            a, b = d_sign_oracle(y, tr), d_sign_fast(cache, tr)
            assert a == pytest.approx(b, rel=1e-11, abs=1e-11)


def test_fast_sign_matches_oracle_with_ties():
    # integer-valued data forces exact duplicate rows (zero differences)
    rng = np.random.default_rng(2)
    for _ in range(5):
        n = int(rng.integers(7, 10))
        y = rng.integers(0, 2, size=(n, 2)).astype(float)
        cache = PairwiseSignCache(y)
        assert cache.zero_pairs  # the whole point of this generator
        for tr in all_triples(n):
            a, b = d_sign_oracle(y, tr), d_sign_fast(cache, tr)
            assert a == pytest.approx(b, rel=1e-11, abs=1e-11)


def test_mean_table_matches_oracle():
    rng = np.random.default_rng(3)
    y = rng.standard_normal((9, 3))
    table = MeanStatTable(y)
    for tr in all_triples(9):
        assert table.d_value(tr) == pytest.approx(d_mean_oracle(y, tr), rel=1e-9, abs=1e-9)


def test_sign_statistic_is_bounded_by_pair_counts():
    rng = np.random.default_rng(4)
    y = rng.standard_normal((10, 3))
    cache = PairwiseSignCache(y)
    for tr in all_triples(10):
        nl = tr.k - tr.l + 1
        nr = tr.m - tr.k
        bound = nl * (nl - 1) * nr * (nr - 1)
        assert abs(d_sign_fast(cache, tr)) <= bound + 1e-9


def test_sign_invariances():
    rng = np.random.default_rng(5)
    y = rng.standard_normal((9, 4))
    tr = SegmentTriple(4, 1, 9)
    base = d_sign_fast(PairwiseSignCache(y), tr)
    # scaling, translation, and global negation leave every sign product alone
    assert d_sign_fast(PairwiseSignCache(3.7 * y), tr) == pytest.approx(base, rel=1e-12)
    assert d_sign_fast(PairwiseSignCache(y + 41.0), tr) == pytest.approx(base, rel=1e-9)
    assert d_sign_fast(PairwiseSignCache(-y), tr) == pytest.approx(base, rel=1e-12)


def test_mean_statistic_scales_quadratically():
    rng = np.random.default_rng(6)
    y = rng.standard_normal((9, 4))
    tr = SegmentTriple(5, 2, 9)
    base = d_mean(y, tr)
    assert d_mean(2.0 * y, tr) == pytest.approx(4.0 * base, rel=1e-9)
    assert d_mean(y + 3.0, tr) == pytest.approx(base, rel=1e-6, abs=1e-6)


def test_identical_rows_give_zero():
    y = np.ones((8, 3))
    tr = SegmentTriple(4, 1, 8)
    assert d_sign_fast(PairwiseSignCache(y), tr) == 0.0
    assert d_sign_oracle(y, tr) == 0.0
    assert d_mean(y, tr) == pytest.approx(0.0, abs=1e-9)


def test_cache_sign_antisymmetry_and_zero_pairs():
    y = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [2.0, 1.0]])
    cache = PairwiseSignCache(y)
    assert (1, 3) in cache.zero_pairs
    s12 = cache.sign(1, 2)
    s21 = cache.sign(2, 1)
    assert np.array_equal(s12, -s21)
    assert np.array_equal(cache.sign(1, 3), np.zeros(2))


def test_triple_outside_data_rejected():
    y = np.zeros((6, 2))
    with pytest.raises(DomainError):
        d_mean(y, SegmentTriple(4, 2, 8))
