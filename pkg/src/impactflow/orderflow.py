"""Transaction records, delimited-file ingestion, and the return decomposition.

The canonical file format is a comma-delimited text file with header

    i,broker,sign,volume,log_mid_pre,log_mid_post

holding one transaction per row in transaction time: ``sign`` is +1 for a
buyer-initiated and -1 for a seller-initiated transaction, ``volume`` the
transacted size, and the two ``log_mid_*`` columns the log midprice directly
before and directly after the transaction.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInput, MalformedRow, NonFinitePrice, TooShort

HEADER = ("i", "broker", "sign", "volume", "log_mid_pre", "log_mid_post")


@dataclass(frozen=True)
class Transaction:
    """One transaction: who initiated it, its size, and the midprice around it."""

    index: int
    broker: str
    sign: int
    volume: float
    log_mid_pre: float
    log_mid_post: float


class TransactionSeries:
    """Columnar view of a transaction stream, indexed 0..n-1 in transaction time."""

    def __init__(self, brokers, signs, volumes, log_mid_pre, log_mid_post):
        self.brokers = list(brokers)
        self.signs = np.ascontiguousarray(signs, dtype=np.int64)
        self.volumes = np.ascontiguousarray(volumes, dtype=np.float64)
        self.log_mid_pre = np.ascontiguousarray(log_mid_pre, dtype=np.float64)
        self.log_mid_post = np.ascontiguousarray(log_mid_post, dtype=np.float64)

        n = len(self.brokers)
        for arr in (self.signs, self.volumes, self.log_mid_pre, self.log_mid_post):
            if arr.shape != (n,):
                raise MalformedRow("column lengths disagree")
        if n == 0:
            raise EmptyInput("no transactions")
        if not np.all(np.abs(self.signs) == 1):
            raise MalformedRow("signs must be +1 or -1")
        if not np.all(np.isfinite(self.volumes)) or np.any(self.volumes <= 0):
            raise MalformedRow("volumes must be finite and positive")
        if not (np.all(np.isfinite(self.log_mid_pre)) and np.all(np.isfinite(self.log_mid_post))):
            raise NonFinitePrice("log midprices must be finite")
        for arr in (self.signs, self.volumes, self.log_mid_pre, self.log_mid_post):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.brokers)

    def __getitem__(self, i: int) -> Transaction:
        return Transaction(
            index=i,
            broker=self.brokers[i],
            sign=int(self.signs[i]),
            volume=float(self.volumes[i]),
            log_mid_pre=float(self.log_mid_pre[i]),
            log_mid_post=float(self.log_mid_post[i]),
        )


@dataclass(frozen=True)
class ReturnSeries:
    """Per-transaction return decomposition r = l + q.

    r[i] is the log midprice move from just before transaction i to just
    before transaction i+1, l[i] the move caused by the transaction itself
    (initial impact) and q[i] the quote revision before the next transaction.
    All three have length n-1: the last transaction has no following
    pre-transaction midpoint.
    """

    r: np.ndarray
    l: np.ndarray
    q: np.ndarray

    def __len__(self) -> int:
        return self.r.size


def _text_lines(source):
    if isinstance(source, (str, Path)):
        return open(source, "r", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.BufferedIOBase) or (
        hasattr(source, "read") and isinstance(source.read(0), bytes)
    ):
        return io.TextIOWrapper(source, encoding="utf-8")
    return source


def parse_transactions(source) -> TransactionSeries:
    """Read a transaction file, validating every row.

    Accepts a path or an open text/byte stream. Rows keep file order and are
    renumbered 0..n-1, so the ``i`` column is informational. Raises
    MalformedRow or NonFinitePrice with the offending 1-based line number,
    EmptyInput when there are no data rows.
    """
    fh = _text_lines(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInput("empty file") from None
        if tuple(h.strip() for h in header) != HEADER:
            raise MalformedRow(f"line 1: expected header {','.join(HEADER)}")

        brokers: list[str] = []
        signs: list[int] = []
        volumes: list[float] = []
        pre: list[float] = []
        post: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise MalformedRow(f"line {lineno}: expected 6 fields, got {len(row)}")
            _, broker, sign_s, vol_s, pre_s, post_s = row
            if sign_s.strip() not in ("1", "+1", "-1"):
                raise MalformedRow(f"line {lineno}: sign must be +1 or -1, got {sign_s!r}")
            try:
                vol = float(vol_s)
            except ValueError:
                raise MalformedRow(f"line {lineno}: bad volume {vol_s!r}") from None
            if not np.isfinite(vol) or vol <= 0:
                raise MalformedRow(f"line {lineno}: volume must be finite and positive")
            try:
                p0 = float(pre_s)
                p1 = float(post_s)
            except ValueError:
                raise MalformedRow(f"line {lineno}: bad log midprice") from None
            if not (np.isfinite(p0) and np.isfinite(p1)):
                raise NonFinitePrice(f"line {lineno}: log midprice is not finite")
            brokers.append(broker)
            signs.append(int(sign_s))
            volumes.append(vol)
            pre.append(p0)
            post.append(p1)
    finally:
        if isinstance(source, (str, Path)):
            fh.close()

    if not brokers:
        raise EmptyInput("no data rows")
    return TransactionSeries(brokers, signs, volumes, pre, post)


def write_transactions(series: TransactionSeries, dest) -> None:
    """Write a series in the canonical format, floats at round-trip precision."""
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", newline="") if own else dest
    try:
        fh.write(",".join(HEADER) + "\n")
        for i in range(len(series)):
            fh.write(
                f"{i},{series.brokers[i]},{int(series.signs[i])},"
                f"{float(series.volumes[i])!r},{float(series.log_mid_pre[i])!r},{float(series.log_mid_post[i])!r}\n"
            )
    finally:
        if own:
            fh.close()


def derive_returns(series: TransactionSeries) -> ReturnSeries:
    """Decompose the midprice path into r = l + q per transaction."""
    n = len(series)
    if n < 2:
        raise TooShort("need at least 2 transactions to form a return")
    pre = series.log_mid_pre
    post = series.log_mid_post
    r = pre[1:] - pre[:-1]
    l = post[:-1] - pre[:-1]
    q = pre[1:] - post[:-1]
    for arr in (r, l, q):
        arr.setflags(write=False)
    return ReturnSeries(r=r, l=l, q=q)
