import json

import numpy as np
import pytest

from signseg import (
    DomainError,
    FormatError,
    NoncentralShift,
    QuantileTable,
    RandomStream,
    TableStore,
    VersionError,
    load_table,
    p_value,
    save_table,
    simulate_limit,
)
from signseg.limit import (
    LimitDraw,
    _delta_grids,
    _functional_batch,
    _triangular_batch,
    delta_shift,
    g_process,
    q_process,
)


def draws(n, count, seed=0):
    root = RandomStream(seed)
    return [LimitDraw(n, root.substream(r).generator()) for r in range(count)]


def cov_formula(n, a1, b1, a2, b2):
    """Closed-form Cov(Q(a1,b1), Q(a2,b2)) for integer window endpoints."""
    m = min(b1, b2) - max(a1, a2)
    if m <= 0:
        return 0.0
    return m * (m + 1) / n ** 2


def test_window_sum_matches_brute_force():
    draw = draws(7, 1, seed=5)[0]
    for a in range(0, 7):
        for b in range(a + 1, 8):
            brute = sum(
                draw.z[i, j] for i in range(1, b + 1) for j in range(1, i) if j >= a
            )
            assert draw.window_sum(a, b) == pytest.approx(brute, abs=1e-12)


def test_q_variance_hand_value():
    # n=10, window [1, 5]: 10 pairs, each variance 2/n^2 -> 0.20
    assert cov_formula(10, 1, 5, 1, 5) == pytest.approx(0.20)
    sample = np.array([q_process(d, 1, 5) for d in draws(10, 4000)])
    assert np.var(sample) == pytest.approx(0.20, rel=0.12)


def test_q_covariance_matches_formula():
    n = 10
    pairs = [((1, 5), (1, 5)), ((1, 5), (3, 8)), ((0, 4), (2, 9)), ((1, 3), (5, 9))]
    sample = draws(n, 3000, seed=31)
    for (a1, b1), (a2, b2) in pairs:
        q1 = np.array([q_process(d, a1, b1) for d in sample])
        q2 = np.array([q_process(d, a2, b2) for d in sample])
        prod = (q1 - q1.mean()) * (q2 - q2.mean())
        se = prod.std() / np.sqrt(len(prod))
        want = cov_formula(n, a1, b1, a2, b2)
        assert abs(prod.mean() - want) < 4 * se + 1e-12


def test_g_process_matches_hand_formula():
    draw = draws(12, 1, seed=7)[0]
    n = 12
    for (k, l, m) in [(4, 1, 12), (6, 2, 11), (3, 1, 7)]:
        want = (
            (m - l) / n * (m - k - 1) / n * q_process(draw, l, k)
            + (m - l) / n * (k - l) / n * q_process(draw, k + 1, m)
            - (k - l) / n * (m - k - 1) / n * q_process(draw, l, m)
        )
        assert g_process(draw, k, l, m) == pytest.approx(want, abs=1e-14)
    sample = np.array([g_process(d, 5, 1, 10) for d in draws(10, 3000, seed=8)])
    assert abs(sample.mean()) < 4 * sample.std() / np.sqrt(len(sample))


def test_batched_functional_equals_per_draw_loop():
    n, reps, seed = 10, 40, 17
    root = RandomStream(seed)
    streams = [root.substream(r) for r in range(reps)]
    z = _triangular_batch(n, streams)
    batch = _functional_batch(n, z, None)

    for r in range(reps):
        draw = LimitDraw(n, streams[r].generator())
        assert np.allclose(draw.z, z[r])
        best = 0.0
        for k in range(4, n - 3):
            num = g_process(draw, k, 1, n)
            left = sum(g_process(draw, t, 1, k) ** 2 for t in range(2, k - 1))
            right = sum(g_process(draw, t, k + 1, n) ** 2 for t in range(k + 2, n - 1))
            den = left + right
            if den > 0:
                best = max(best, n * num ** 2 / den)
        assert batch[r] == pytest.approx(best, rel=1e-10)


def test_delta_shift_values():
    assert delta_shift(10, 5, 1, 10, 5) == pytest.approx(0.04)
    assert delta_shift(10, 7, 1, 10, 3) == pytest.approx(4 * 3 * 3 / 1e4)
    assert delta_shift(10, 5, 1, 10, 10) == 0.0  # change at the right edge
    assert delta_shift(10, 5, 1, 10, 1) == 0.0  # change at the left edge
    assert delta_shift(10, 7, 6, 9, 2) == 0.0  # change outside the window
    with pytest.raises(DomainError):
        delta_shift(10, 5, 6, 5, 3)
    with pytest.raises(DomainError):
        delta_shift(10, 5, 1, 10, 0)


def test_delta_grids_match_scalar_function():
    n, kstar = 12, 7
    d_num, d_left, d_right = _delta_grids(n, kstar)
    for k in range(1, n):
        assert d_num[k] == pytest.approx(delta_shift(n, k, 1, n, kstar), abs=1e-15)
        for t in range(1, k):
            assert d_left[t, k] == pytest.approx(delta_shift(n, t, 1, k, kstar), abs=1e-15)
        for t in range(k + 1, n):
            assert d_right[t, k] == pytest.approx(
                delta_shift(n, t, k + 1, n, kstar), abs=1e-15
            )


def test_zero_drift_noncentral_equals_central():
    stream = RandomStream(23)
    central = simulate_limit(10, 300, stream)
    shifted = simulate_limit(10, 300, stream, noncentral=NoncentralShift(0.0, 0.5))
    assert np.allclose(central.values, shifted.values, rtol=1e-10)


def test_noncentral_mean_grows_with_drift():
    stream = RandomStream(24)
    c0 = simulate_limit(12, 400, stream)
    c4 = simulate_limit(12, 400, stream, noncentral=NoncentralShift(4.0, 0.5))
    assert c4.values.mean() > c0.values.mean()
    assert c4.quantile(0.95) > c0.quantile(0.95)


def test_p_value_hand_table():
    table = QuantileTable(n=8, B=4, seed=0, values=np.array([1.0, 2.0, 3.0, 4.0]))
    assert p_value(table, 2.5) == pytest.approx(3 / 5)
    assert p_value(table, 0.0) == 1.0
    assert p_value(table, np.inf) == pytest.approx(1 / 5)  # 1 / (B + 1)
    with pytest.raises(DomainError):
        p_value(table, np.nan)


def test_p_value_monotone():
    rng = np.random.default_rng(2)
    table = QuantileTable(n=8, B=50, seed=0, values=np.sort(rng.chisquare(3, 50)))
    grid = np.linspace(0, 12, 40)
    ps = [p_value(table, g) for g in grid]
    assert all(a >= b for a, b in zip(ps, ps[1:]))


def test_quantile_table_validation():
    with pytest.raises(DomainError):
        QuantileTable(n=8, B=3, values=np.array([2.0, 1.0, 3.0]), seed=0)
    with pytest.raises(DomainError):
        QuantileTable(n=8, B=3, values=np.array([-1.0, 1.0, 3.0]), seed=0)
    with pytest.raises(DomainError):
        QuantileTable(n=8, B=5, values=np.array([1.0, 2.0]), seed=0)


def test_save_load_round_trip(tmp_path):
    table = simulate_limit(9, 50, RandomStream(1), noncentral=NoncentralShift(2.0, 0.4))
    path = tmp_path / "t.json"
    save_table(table, path)
    back = load_table(path)
    assert back.n == table.n and back.B == table.B and back.seed == table.seed
    assert back.noncentral == table.noncentral
    assert np.array_equal(back.values, table.values)


def test_load_table_error_paths(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("definitely not json")
    with pytest.raises(FormatError):
        load_table(bad)

    table = simulate_limit(9, 20, RandomStream(2))
    path = tmp_path / "v.json"
    save_table(table, path)
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(VersionError):
        load_table(path)

    doc["format_version"] = 1
    doc["encoding"] = "plain"
    doc["values"] = sorted(np.random.default_rng(0).chisquare(2, doc["B"]).tolist())
    path.write_text(json.dumps(doc))
    assert load_table(path).B == doc["B"]

    doc["encoding"] = "surprising"
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatError):
        load_table(path)

    path.write_text(json.dumps({"n": 9}))
    with pytest.raises(FormatError):
        load_table(path)


def test_worker_count_does_not_change_draws():
    serial = simulate_limit(10, 700, RandomStream(3), workers=1)
    split = simulate_limit(10, 700, RandomStream(3), workers=2)
    assert np.array_equal(serial.values, split.values)


def test_simulate_rejects_short_n():
    with pytest.raises(DomainError):
        simulate_limit(7, 10)


def test_table_store_caches_and_persists(tmp_path):
    store = TableStore(directory=tmp_path, B=120, base_seed=55)
    t1 = store.get(9)
    assert store.get(9) is t1  # memory cache
    assert (tmp_path / "limit_n9_B120.json").exists()

    again = TableStore(directory=tmp_path, B=120, base_seed=55)
    t2 = again.get(9)
    assert np.array_equal(t1.values, t2.values)

    memory_only = TableStore(B=60, base_seed=55)
    assert memory_only.path_for(9) is None
    assert memory_only.get(9).B == 60
