import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signseg import DomainError, seeded_intervals

ROOT_TWO_INV = 2.0 ** -0.5


def test_first_layer_is_full_interval():
    s = seeded_intervals(57, ROOT_TWO_INV)
    assert s.intervals[0] == (1, 57)
    assert s.layer_of[(1, 57)] == 1
    assert s.layers[0].count == 1 and s.layers[0].shift == 0.0


def test_layer_two_hand_values():
    s = seeded_intervals(100, ROOT_TWO_INV)
    layer2 = sorted(iv for iv, k in s.layer_of.items() if k == 2)
    assert layer2 == [(1, 80), (11, 90), (21, 100)]


def test_minimum_n_collapses_to_single_interval():
    s = seeded_intervals(8, ROOT_TWO_INV)
    assert list(s) == [(1, 8)]
    assert all(layer.length == 8 for layer in s.layers)


def test_golden_collection_n100():
    s = seeded_intervals(100, ROOT_TWO_INV)
    assert len(s) == 133
    assert s.lengths() == [10, 20, 30, 40, 50, 80, 100]
    # the k=3 scale hits the 1/2 boundary exactly: three evenly placed
    # half-length windows, not a drifted length-60 layer
    layer3 = sorted(iv for iv, k in s.layer_of.items() if k == 3)
    assert layer3 == [(1, 50), (26, 75), (51, 100)]


def test_lengths_are_full_or_multiples_of_ten():
    for n in (23, 64, 120, 250):
        s = seeded_intervals(n, 0.8)
        for length in s.lengths():
            assert length == n or length % 10 == 0


def test_deterministic():
    a = seeded_intervals(143, 0.71)
    b = seeded_intervals(143, 0.71)
    assert a.intervals == b.intervals
    assert a.layer_of == b.layer_of


def test_within_filters_to_contained_members():
    s = seeded_intervals(100, ROOT_TWO_INV)
    pool = s.within(11, 60)
    assert pool == [iv for iv in s.intervals if iv[0] >= 11 and iv[1] <= 60]
    assert pool  # the sub-segment is long enough to hold seeded intervals
    assert all(11 <= a <= b <= 60 for a, b in pool)
    assert s.within(1, 100) == list(s.intervals)
    assert s.within(50, 52) == []


def test_to_csv_round_trip(tmp_path):
    s = seeded_intervals(40, ROOT_TWO_INV)
    path = tmp_path / "intervals.csv"
    s.to_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(s)
    parsed = [(int(r["a"]), int(r["b"])) for r in rows]
    assert tuple(parsed) == s.intervals
    assert all(int(r["layer"]) == s.layer_of[iv] for r, iv in zip(rows, parsed))


def test_domain_validation():
    with pytest.raises(DomainError):
        seeded_intervals(7, ROOT_TWO_INV)
    with pytest.raises(DomainError):
        seeded_intervals(50, 0.49)
    with pytest.raises(DomainError):
        seeded_intervals(50, 1.0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(8, 500), alpha=st.floats(0.5, 0.95))
def test_collection_invariants(n, alpha):
    s = seeded_intervals(n, alpha)
    assert (1, n) in s.layer_of
    assert len(set(s.intervals)) == len(s.intervals)
    assert set(s.layer_of) == set(s.intervals)
    for a, b in s.intervals:
        assert 1 <= a <= b <= n
        assert b - a + 1 >= 8
    # deeper layers never use longer windows
    by_layer = {}
    for (a, b), k in s.layer_of.items():
        by_layer.setdefault(k, set()).add(b - a + 1)
    indices = sorted(by_layer)
    layer_lengths = [max(by_layer[k]) for k in indices]
    assert all(x >= y for x, y in zip(layer_lengths, layer_lengths[1:]))
