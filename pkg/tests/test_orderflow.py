"""Transaction ingestion and the r = l + q decomposition."""

import io

import numpy as np
import pytest

from impactflow.errors import (
    EmptyInput,
    MalformedRow,
    NonFinitePrice,
    TooShort,
)
from impactflow.orderflow import (
    HEADER,
    TransactionSeries,
    derive_returns,
    parse_transactions,
    write_transactions,
)


def make_series(pre, post, signs=None, volumes=None, brokers=None):
    n = len(pre)
    return TransactionSeries(
        brokers=brokers or ["b"] * n,
        signs=signs if signs is not None else [1] * n,
        volumes=volumes if volumes is not None else [1.0] * n,
        log_mid_pre=pre,
        log_mid_post=post,
    )


def csv_text(rows):
    lines = [",".join(HEADER)]
    lines += [",".join(str(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


class TestDeriveReturns:
    def test_hand_decomposition(self):
        # one transaction at log-mid 0.0 that moves the quote to 0.004,
        # then drifts to 0.01 before the next transaction
        s = make_series(pre=[0.0, 0.01], post=[0.004, 0.012])
        ret = derive_returns(s)
        assert ret.r[0] == pytest.approx(0.01, abs=1e-15)
        assert ret.l[0] == pytest.approx(0.004, abs=1e-15)
        assert ret.q[0] == pytest.approx(0.006, abs=1e-15)
        assert len(ret) == 1

    def test_identity_r_equals_l_plus_q(self):
        rng = np.random.default_rng(0)
        pre = np.cumsum(rng.normal(size=500)) * 1e-3
        post = pre + rng.normal(size=500) * 1e-4
        ret = derive_returns(make_series(pre, post))
        np.testing.assert_allclose(ret.r, ret.l + ret.q, rtol=0, atol=1e-12)
        assert len(ret) == 499

    def test_too_short(self):
        with pytest.raises(TooShort):
            derive_returns(make_series([0.0], [0.0]))


class TestSeriesValidation:
    def test_sign_zero_rejected(self):
        with pytest.raises(MalformedRow):
            make_series([0.0, 0.1], [0.0, 0.1], signs=[1, 0])

    def test_nonpositive_volume_rejected(self):
        with pytest.raises(MalformedRow):
            make_series([0.0, 0.1], [0.0, 0.1], volumes=[1.0, 0.0])

    def test_nonfinite_price_rejected(self):
        with pytest.raises(NonFinitePrice):
            make_series([0.0, np.nan], [0.0, 0.1])

    def test_column_length_mismatch(self):
        with pytest.raises(MalformedRow):
            TransactionSeries(["a"], [1, -1], [1.0, 1.0], [0.0, 0.0], [0.0, 0.0])

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            make_series([], [])

    def test_columns_are_read_only(self):
        s = make_series([0.0, 0.1], [0.0, 0.1])
        with pytest.raises(ValueError):
            s.signs[0] = -1

    def test_getitem(self):
        s = make_series([0.0, 0.1], [0.01, 0.1], signs=[-1, 1], volumes=[3.5, 1.0])
        t = s[0]
        assert (t.index, t.broker, t.sign, t.volume) == (0, "b", -1, 3.5)
        assert t.log_mid_post == 0.01
        assert len(s) == 2


class TestParseTransactions:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        pre = np.cumsum(rng.normal(size=50)) * 1e-3
        post = pre + rng.normal(size=50) * 1e-4
        signs = rng.choice([-1, 1], size=50)
        vols = rng.lognormal(0, 1, size=50)
        s = make_series(pre, post, signs=signs, volumes=vols, brokers=[f"b{i % 5}" for i in range(50)])
        path = tmp_path / "t.csv"
        write_transactions(s, path)
        back = parse_transactions(path)
        assert back.brokers == s.brokers
        np.testing.assert_array_equal(back.signs, s.signs)
        # repr round-trips floats exactly
        np.testing.assert_array_equal(back.volumes, s.volumes)
        np.testing.assert_array_equal(back.log_mid_pre, s.log_mid_pre)
        np.testing.assert_array_equal(back.log_mid_post, s.log_mid_post)

    def test_accepts_text_stream_and_renumbers(self):
        text = csv_text([(9, "a", 1, 2.0, 0.0, 0.0), (4, "a", -1, 1.0, 0.1, 0.1)])
        s = parse_transactions(io.StringIO(text))
        assert len(s) == 2
        assert s[0].index == 0 and s[1].index == 1

    def test_plus_prefixed_sign(self):
        s = parse_transactions(io.StringIO(csv_text([(0, "a", "+1", 1.0, 0.0, 0.0)])))
        assert s.signs[0] == 1

    def test_sign_zero_row(self):
        text = csv_text([(0, "a", 1, 1.0, 0.0, 0.0), (1, "a", 0, 1.0, 0.1, 0.1)])
        with pytest.raises(MalformedRow, match="line 3"):
            parse_transactions(io.StringIO(text))

    def test_bad_volume_row(self):
        text = csv_text([(0, "a", 1, "ten", 0.0, 0.0)])
        with pytest.raises(MalformedRow, match="line 2"):
            parse_transactions(io.StringIO(text))

    def test_nonfinite_price_row(self):
        text = csv_text([(0, "a", 1, 1.0, "inf", 0.0)])
        with pytest.raises(NonFinitePrice):
            parse_transactions(io.StringIO(text))

    def test_wrong_field_count(self):
        with pytest.raises(MalformedRow, match="6 fields"):
            parse_transactions(io.StringIO(",".join(HEADER) + "\n1,a,1,1.0,0.0\n"))

    def test_wrong_header(self):
        with pytest.raises(MalformedRow, match="header"):
            parse_transactions(io.StringIO("a,b,c,d,e,f\n"))

    def test_empty_file(self):
        with pytest.raises(EmptyInput):
            parse_transactions(io.StringIO(""))

    def test_header_only(self):
        with pytest.raises(EmptyInput):
            parse_transactions(io.StringIO(",".join(HEADER) + "\n"))

    def test_bytes_input(self):
        data = csv_text([(0, "a", 1, 1.0, 0.0, 0.0)]).encode()
        assert len(parse_transactions(data)) == 1
