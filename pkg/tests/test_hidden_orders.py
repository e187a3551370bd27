"""Hidden-order reconstruction against a brute-force oracle, activity views,
and the order CSV round trip."""

import io

import numpy as np
import pytest

from impactflow import estimators
from impactflow.errors import DomainError, IndexOutOfRange
from impactflow.hidden_orders import (
    activity_at,
    build_order_set,
    read_orders_csv,
    reconstruct,
    signed_size_acf,
    size_samples,
    write_orders_csv,
    write_piece_map_csv,
)
from impactflow.orderflow import TransactionSeries


def tagged_series(brokers, signs):
    n = len(brokers)
    return TransactionSeries(
        brokers=brokers,
        signs=signs,
        volumes=np.ones(n),
        log_mid_pre=np.zeros(n),
        log_mid_post=np.zeros(n),
    )


def random_series(rng, n, n_brokers=4):
    return tagged_series(
        [f"b{rng.integers(n_brokers)}" for _ in range(n)],
        rng.choice([-1, 1], size=n),
    )


def oracle_partition(series, window):
    """Transitive closure by union-find: join same-(broker, sign) pairs
    whose consecutive occurrence gap is at most window."""
    n = len(series)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    last: dict[tuple, int] = {}
    for i in range(n):
        key = (series.brokers[i], int(series.signs[i]))
        j = last.get(key)
        if j is not None and i - j <= window:
            parent[find(i)] = find(j)
        last[key] = i
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


class TestReconstruct:
    def test_matches_closure_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(2, 201))
            window = int(rng.integers(1, 30))
            series = random_series(rng, n)
            rec = reconstruct(series, window)
            got = sorted(o.piece_times.tolist() for o in rec.orders)
            assert got == oracle_partition(series, window)

    def test_toy_window_split(self):
        # same broker and sign at 0, 50, 160 with window 100:
        # 160 is 110 past 50, so it opens a new order
        b = ["pad"] * 161
        s = [-1] * 161
        for i in (0, 50, 160):
            b[i], s[i] = "A", 1
        rec = reconstruct(tagged_series(b, s), 100)
        a_orders = sorted(
            o.piece_times.tolist() for o in rec.orders if o.sign == 1 and o.n >= 1 and b[o.start] == "A"
        )
        assert [0, 50] in a_orders
        assert [160] in a_orders

    def test_sign_breaks_the_chain(self):
        rec = reconstruct(tagged_series(["A", "A", "A"], [1, -1, 1]), 100)
        assert sorted(o.piece_times.tolist() for o in rec.orders) == [[0, 2], [1]]

    def test_gap_boundary(self):
        b = ["A", "pad", "A"]
        s = [1, -1, 1]
        joined = reconstruct(tagged_series(b, s), 2)
        assert any(o.piece_times.tolist() == [0, 2] for o in joined.orders)
        split = reconstruct(tagged_series(b, s), 1)
        assert all(o.n == 1 for o in split.orders)

    def test_window_monotonicity(self):
        """A larger window can only merge orders, never split them."""
        rng = np.random.default_rng(17)
        series = random_series(rng, 300)
        for w1, w2 in ((5, 20), (20, 80)):
            small = reconstruct(series, w1)
            large = reconstruct(series, w2)
            assert len(large) <= len(small)
            # each small order is contained in exactly one large order
            of_large = large.order_of
            for o in small.orders:
                assert np.unique(of_large[o.piece_times]).size == 1

    def test_partition_is_exhaustive(self):
        rng = np.random.default_rng(23)
        series = random_series(rng, 500)
        rec = reconstruct(series, 50)
        assert sum(o.n for o in rec.orders) == 500
        assert np.all(rec.order_of >= 0)
        counts = np.bincount(rec.order_of, minlength=len(rec))
        np.testing.assert_array_equal(counts, [o.n for o in rec.orders])

    def test_orders_sorted_and_numbered_by_start(self):
        rng = np.random.default_rng(31)
        rec = reconstruct(random_series(rng, 200), 30)
        starts = [o.start for o in rec.orders]
        assert starts == sorted(starts)
        assert [o.order_id for o in rec.orders] == list(range(len(rec)))

    def test_piece_numbers_are_one_based(self):
        rec = reconstruct(tagged_series(["A", "A", "A"], [1, 1, 1]), 100)
        np.testing.assert_array_equal(rec.piece_no, [1, 2, 3])

    def test_v_mean(self):
        s = TransactionSeries(
            brokers=["A", "A"],
            signs=[1, 1],
            volumes=[2.0, 4.0],
            log_mid_pre=[0.0, 0.0],
            log_mid_post=[0.0, 0.0],
        )
        rec = reconstruct(s, 100)
        assert rec.orders[0].v_mean == pytest.approx(3.0)

    def test_bad_window(self):
        with pytest.raises(DomainError):
            reconstruct(tagged_series(["A"], [1]), 0)


class TestThetaFallbacks:
    def test_multi_piece_theta_is_realized_pace(self):
        orders = build_order_set([[0, 4, 10]], [1], [1.0], 11)
        assert orders.orders[0].theta == pytest.approx(5.0)

    def test_single_piece_falls_back_to_key_mean_gap(self):
        # broker A trades at 0 and 500 with window 100: two single-piece
        # orders whose pace estimate is the A-chain mean gap, 500
        b = ["A"] + ["pad"] * 499 + ["A"]
        s = [1] * 501
        rec = reconstruct(tagged_series(b, s), 100)
        a = [o for o in rec.orders if o.n == 1 and b[o.start] == "A"]
        assert len(a) == 2
        assert all(o.theta == pytest.approx(500.0) for o in a)

    def test_single_piece_set_wide_fallback(self):
        orders = build_order_set([[0, 2], [5]], [1, -1], [1.0, 1.0], 6)
        assert orders.mean_gap == pytest.approx(2.0)
        assert orders.orders[1].theta == pytest.approx(2.0)

    def test_caller_theta_wins_for_single_piece(self):
        orders = build_order_set([[0], [3]], [1, 1], [1.0, 1.0], 4, thetas=[7.0, None])
        assert orders.orders[0].theta == pytest.approx(7.0)
        assert orders.orders[1].theta == pytest.approx(1.0)  # empty gap set defaults to 1


class TestActivityAt:
    def setup_method(self):
        self.orders = build_order_set([[0, 10, 20]], [1], [2.0], 200)

    def test_hindsight_mid_order(self):
        active = activity_at(self.orders, 15, mode="hindsight")
        assert len(active) == 1
        view = active[0]
        assert view.n_so_far == 2
        assert view.theta_estimate == pytest.approx(10.0)
        assert view.sign == 1 and view.v_mean == 2.0

    def test_state_is_prior_to_the_index(self):
        # at i=10 the piece at 10 has not executed yet
        assert activity_at(self.orders, 10)[0].n_so_far == 1
        # nothing is known at the first piece's own time
        assert activity_at(self.orders, 0) == []

    def test_hindsight_drops_after_last_piece(self):
        assert activity_at(self.orders, 20)[0].n_so_far == 2
        assert activity_at(self.orders, 21) == []

    def test_causal_timeout(self):
        assert activity_at(self.orders, 120, mode="causal", timeout=100) != []
        assert activity_at(self.orders, 121, mode="causal", timeout=100) == []

    def test_causal_theta_from_observed_pieces(self):
        view = activity_at(self.orders, 15, mode="causal")[0]
        assert view.n_so_far == 2
        assert view.theta_estimate == pytest.approx(10.0)
        # single observed piece: set-wide mean gap
        view = activity_at(self.orders, 5, mode="causal")[0]
        assert view.theta_estimate == pytest.approx(self.orders.mean_gap)

    def test_hindsight_activity_sums_to_duration(self):
        """Counting indices with the order active recovers end - start."""
        rng = np.random.default_rng(3)
        times = np.unique(rng.integers(0, 150, size=8))
        orders = build_order_set([times.tolist()], [1], [1.0], 200)
        active = sum(
            bool(activity_at(orders, i, mode="hindsight")) for i in range(200)
        )
        assert active == times[-1] - times[0]

    def test_index_guard(self):
        with pytest.raises(IndexOutOfRange):
            activity_at(self.orders, 200)
        with pytest.raises(IndexOutOfRange):
            activity_at(self.orders, -1)

    def test_mode_guard(self):
        with pytest.raises(DomainError):
            activity_at(self.orders, 5, mode="clairvoyant")


class TestSetStatistics:
    def test_size_samples(self):
        orders = build_order_set([[0, 1], [2], [3, 4, 5]], [1, -1, 1], [1.0] * 3, 6)
        np.testing.assert_array_equal(size_samples(orders), [2.0, 1.0, 3.0])

    def test_alternating_signed_sizes(self):
        pieces = [[i] for i in range(40)]
        signs = [1 if i % 2 == 0 else -1 for i in range(40)]
        orders = build_order_set(pieces, signs, [1.0] * 40, 40)
        est = signed_size_acf(orders, 2)
        assert est.values[1] == pytest.approx(-1.0, abs=0.06)
        assert isinstance(est, estimators.AcfEstimate)


class TestOrderCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        series = random_series(rng, 300)
        rec = reconstruct(series, 40)
        opath = tmp_path / "orders.csv"
        ppath = tmp_path / "pieces.csv"
        write_orders_csv(rec, opath)
        write_piece_map_csv(rec, ppath)

        rows = read_orders_csv(opath)
        assert len(rows) == len(rec)
        for row, o in zip(rows, rec.orders):
            assert row["order_id"] == o.order_id
            assert row["sign"] == o.sign
            assert row["n"] == o.n
            assert row["v_mean"] == o.v_mean
            assert row["theta"] == o.theta
            assert (row["t_start"], row["t_end"]) == (o.start, o.end)

        lines = ppath.read_text().strip().split("\n")
        assert lines[0] == "i,order_id,n"
        assert len(lines) == 301
        i, oid, num = lines[42].split(",")
        assert int(i) == 41
        assert int(oid) == rec.order_of[41]
        assert int(num) == rec.piece_no[41]

    def test_write_to_stream(self):
        orders = build_order_set([[0, 3]], [1], [1.5], 4)
        buf = io.StringIO()
        write_orders_csv(orders, buf)
        assert buf.getvalue().splitlines()[0] == "order_id,sign,N,v_mean,theta,t_start,t_end"
        assert buf.getvalue().splitlines()[1] == "0,1,2,1.5,3.0,0,3"
