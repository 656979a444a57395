import numpy as np
import pytest
from hypothesis import given, strategies as st

from ledgerlens import (
    SynthConfig,
    compute_rankings,
    generate,
    retention,
    spearman,
    stability_series,
    summarize,
)
from ledgerlens.balances import Ranking
from conftest import make_ledger, rec
from oracles import average_ranks, pearson_fsum


def mk_ranking(ids, balances, day=0, n=None):
    order = sorted(range(len(ids)), key=lambda i: (-balances[i], ids[i]))
    ids = np.asarray([ids[i] for i in order], dtype=np.int64)
    balances = np.asarray([balances[i] for i in order], dtype=np.int64)
    return Ranking(day, n or len(ids), ids, balances)


def ranking_from_positions(positions):
    """Ranking whose member id m sits at rank positions[m] (1-based, no ties)."""
    n = len(positions)
    pairs = sorted(positions.items(), key=lambda kv: kv[1])
    ids = [m for m, _ in pairs]
    balances = [n - p + 1 for _, p in pairs]
    return mk_ranking(ids, balances)


def oracle_spearman(rank_a, rank_b):
    ra = dict(zip((int(i) for i in rank_a.ids),
                  average_ranks(rank_a.balances.tolist())))
    rb = dict(zip((int(i) for i in rank_b.ids),
                  average_ranks(rank_b.balances.tolist())))
    common = sorted(set(ra) & set(rb))
    if len(common) < 2:
        return None
    return pearson_fsum([ra[i] for i in common], [rb[i] for i in common])


class TestSpearman:
    def test_identical_is_one(self):
        a = mk_ranking([1, 2, 3, 4, 5], [50, 40, 30, 20, 10])
        assert spearman(a, a) == 1.0

    def test_reversal_is_minus_one(self):
        a = mk_ranking([1, 2, 3, 4, 5], [50, 40, 30, 20, 10])
        b = mk_ranking([1, 2, 3, 4, 5], [10, 20, 30, 40, 50])
        assert spearman(a, b) == -1.0

    def test_hand_case_exactly_08(self):
        a = ranking_from_positions({10: 1, 11: 2, 12: 3, 13: 4, 14: 5})
        b = ranking_from_positions({10: 2, 11: 1, 12: 4, 13: 3, 14: 5})
        # ranks X=[1..5] vs Y=[2,1,4,3,5]: 1 - 6*4/120 = 0.8
        assert spearman(a, b) == 0.8

    def test_symmetric_bitwise(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            ids_a = rng.choice(200, size=50, replace=False)
            ids_b = rng.choice(200, size=50, replace=False)
            a = mk_ranking(ids_a.tolist(), rng.integers(1, 20, 50).tolist())
            b = mk_ranking(ids_b.tolist(), rng.integers(1, 20, 50).tolist())
            assert spearman(a, b) == spearman(b, a)

    def test_small_intersection_undefined(self):
        a = mk_ranking([1, 2], [5, 3])
        b = mk_ranking([2, 3], [5, 3])
        assert spearman(a, b) is None

    def test_all_tied_undefined(self):
        a = mk_ranking([1, 2, 3], [5, 5, 5])
        b = mk_ranking([1, 2, 3], [9, 4, 1])
        assert spearman(a, b) is None

    def test_empty_raises(self):
        a = mk_ranking([1], [5])
        empty = Ranking(0, 5, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
        with pytest.raises(ValueError):
            spearman(a, empty)

    def test_matches_oracle_with_ties(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            pool = rng.choice(500, size=120, replace=False)
            ids_a = pool[:80]
            ids_b = pool[40:]
            a = mk_ranking(ids_a.tolist(), rng.integers(1, 15, len(ids_a)).tolist())
            b = mk_ranking(ids_b.tolist(), rng.integers(1, 15, len(ids_b)).tolist())
            got = spearman(a, b)
            want = oracle_spearman(a, b)
            if want is None:
                assert got is None
            else:
                assert got == pytest.approx(want, abs=1e-12)

    def test_penalized_mode_identical(self):
        a = mk_ranking([1, 2, 3], [9, 5, 2])
        assert spearman(a, a, mode="penalized") == 1.0

    def test_penalized_detects_dropout(self):
        # Same order on shared members, but b replaces the tail member.
        a = mk_ranking([1, 2, 3], [9, 5, 2])
        b = mk_ranking([1, 2, 4], [9, 5, 2])
        assert spearman(a, b) == 1.0
        penalized = spearman(a, b, mode="penalized")
        assert penalized is not None and penalized < 1.0

    def test_unknown_mode(self):
        a = mk_ranking([1, 2], [5, 3])
        with pytest.raises(ValueError):
            spearman(a, a, mode="weird")


class TestRetention:
    def test_identical(self):
        a = mk_ranking([1, 2, 3], [9, 5, 2])
        assert retention(a, a, 3) == 1.0

    def test_disjoint(self):
        a = mk_ranking([1, 2], [9, 5])
        b = mk_ranking([3, 4], [9, 5])
        assert retention(a, b, 2) == 0.0

    def test_three_of_five(self):
        a = mk_ranking([1, 2, 3, 4, 5], [9, 8, 7, 6, 5])
        b = mk_ranking([1, 2, 3, 8, 9], [9, 8, 7, 6, 5])
        assert retention(a, b, 5) == 0.6

    def test_truncation_applies(self):
        a = mk_ranking([1, 2, 3, 4], [9, 8, 7, 6])
        b = mk_ranking([3, 4, 1, 2], [9, 8, 7, 6])
        assert retention(a, b, 2) == 0.0

    @given(
        xs=st.sets(st.integers(0, 30), min_size=1, max_size=15),
        ys=st.sets(st.integers(0, 30), min_size=1, max_size=15),
    )
    def test_symmetric_and_bounded(self, xs, ys):
        a = mk_ranking(sorted(xs), list(range(len(xs), 0, -1)))
        b = mk_ranking(sorted(ys), list(range(len(ys), 0, -1)))
        r = retention(a, b, 20)
        assert 0.0 <= r <= 1.0
        assert r == retention(b, a, 20)
        assert (r == 1.0) == (a.members() == b.members())


class TestSeries:
    def test_constant_ledger_all_ones(self):
        lines = [rec("c0", 0, [], [[f"h{i}", 10 + i] for i in range(8)])]
        ledger = make_ledger(lines, epoch=None)
        # Extend history with empty days via a later no-op day boundary tx.
        lines.append(rec("t", 4 * 86_400, [["h0", 1]], [["h0", 1]]))
        ledger = make_ledger(lines)
        rankings = compute_rankings(ledger, 5)
        for metric in ("spearman", "retention"):
            series = stability_series(rankings, 5, 1, metric)
            assert len(series.values) == 4
            assert all(v == 1.0 for v in series.values.values())

    def test_interval_exceeding_history_empty(self):
        lines = [rec("c0", 0, [], [["a", 5]])]
        rankings = compute_rankings(make_ledger(lines), 5)
        series = stability_series(rankings, 5, 10)
        assert series.values == {}

    def test_churn_ledger_retention_constant(self):
        cfg = SynthConfig(seed=3, days=12, regime="churn", churn_rate=0.1,
                          pool=120, reward=0, initial_supply=10**10)
        ledger = generate(cfg)
        rankings = compute_rankings(ledger, 100)
        series = stability_series(rankings, 100, 1, "retention")
        assert len(series.values) == 11
        assert all(v == pytest.approx(0.9) for v in series.values.values())

    def test_churn_spearman_survivors_keep_order(self):
        cfg = SynthConfig(seed=3, days=8, regime="churn", churn_rate=0.1,
                          pool=120, reward=0, initial_supply=10**10)
        rankings = compute_rankings(generate(cfg), 100)
        series = stability_series(rankings, 100, 1, "spearman")
        assert all(v == pytest.approx(1.0) for v in series.values.values())

    def test_retention_decreases_with_churn_rate(self):
        means = []
        for rate in (0.05, 0.1, 0.2):
            cfg = SynthConfig(seed=4, days=10, regime="churn", churn_rate=rate,
                              pool=150, reward=0, initial_supply=10**10)
            rankings = compute_rankings(generate(cfg), 100)
            series = stability_series(rankings, 100, 1, "retention")
            means.append(summarize(series).mean)
        assert means[0] > means[1] > means[2]


class TestSummarize:
    def test_constant(self):
        s = summarize([0.5] * 10)
        assert s.mean == 0.5
        assert s.std == 0.0
        assert s.iqr == 0.0

    def test_linear_interpolation_quartiles(self):
        s = summarize([1.0, 2.0, 3.0, 4.0])
        assert s.median == 2.5
        assert s.q1 == 1.75
        assert s.q3 == 3.25
        assert s.iqr == pytest.approx(1.5)

    def test_drops_undefined(self):
        s = summarize([1.0, None, 3.0])
        assert s.mean == 2.0
        assert s.min == 1.0 and s.max == 3.0

    def test_empty_is_error(self):
        with pytest.raises(ValueError):
            summarize([None, None])
