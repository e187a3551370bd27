"""Reconstruction of hidden orders from the transaction stream.

A hidden order is a sequence of same-sign transactions by one broker, executed
piecewise. Reconstruction chains transactions that share (broker, sign) when
the gap to the chain's most recent piece is at most ``window`` transactions;
chaining is transitive, so pieces far apart belong together when intermediate
pieces link them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import estimators
from .errors import DomainError, IndexOutOfRange


@dataclass(frozen=True)
class HiddenOrder:
    """One reconstructed (or generated) hidden order."""

    order_id: int
    sign: int
    piece_times: np.ndarray
    v_mean: float
    theta: float

    @property
    def n(self) -> int:
        return int(self.piece_times.size)

    @property
    def start(self) -> int:
        return int(self.piece_times[0])

    @property
    def end(self) -> int:
        return int(self.piece_times[-1])


@dataclass(frozen=True)
class HiddenOrderSet:
    """All hidden orders of a series plus the piece-to-order mapping.

    orders are sorted by start time and ids match their position. order_of
    and piece_no map each transaction index to its order id and 1-based piece
    number. mean_gap is the mean inter-piece gap across the whole set, used
    as the pace fallback where an order has a single piece.
    """

    orders: list[HiddenOrder]
    order_of: np.ndarray
    piece_no: np.ndarray
    mean_gap: float

    @property
    def n_transactions(self) -> int:
        return int(self.order_of.size)

    def __len__(self) -> int:
        return len(self.orders)


class ActiveOrder(NamedTuple):
    """Snapshot of one order as the liquidity predictors see it."""

    order_id: int
    n_so_far: int
    theta_estimate: float
    sign: int
    v_mean: float


def _set_mean_gap(piece_time_lists) -> float:
    total = 0.0
    count = 0
    for times in piece_time_lists:
        if len(times) >= 2:
            total += times[-1] - times[0]
            count += len(times) - 1
    return total / count if count else 1.0


def build_order_set(piece_time_lists, signs, v_means, n_transactions, thetas=None) -> HiddenOrderSet:
    """Assemble a HiddenOrderSet from raw per-order piece times.

    Orders are sorted by first piece time and renumbered. theta defaults to
    the order's realized pace (end - start)/(N - 1); single-piece orders fall
    back to the caller-supplied theta or the set-wide mean gap.
    """
    order_ix = sorted(range(len(piece_time_lists)), key=lambda j: piece_time_lists[j][0])
    mean_gap = _set_mean_gap(piece_time_lists)

    orders: list[HiddenOrder] = []
    order_of = np.full(n_transactions, -1, dtype=np.int64)
    piece_no = np.zeros(n_transactions, dtype=np.int64)
    for new_id, j in enumerate(order_ix):
        times = np.asarray(piece_time_lists[j], dtype=np.int64)
        if times.size >= 2:
            theta = float(times[-1] - times[0]) / (times.size - 1)
        elif thetas is not None and thetas[j] is not None:
            theta = float(thetas[j])
        else:
            theta = mean_gap
        orders.append(
            HiddenOrder(
                order_id=new_id,
                sign=int(signs[j]),
                piece_times=times,
                v_mean=float(v_means[j]),
                theta=theta,
            )
        )
        order_of[times] = new_id
        piece_no[times] = np.arange(1, times.size + 1)
    order_of.setflags(write=False)
    piece_no.setflags(write=False)
    return HiddenOrderSet(orders=orders, order_of=order_of, piece_no=piece_no, mean_gap=mean_gap)


def reconstruct(series, window: int = 100) -> HiddenOrderSet:
    """Group a series into hidden orders by broker, sign, and proximity.

    A transaction extends the open (broker, sign) chain when the gap since
    that chain's last piece is at most ``window``; otherwise it starts a new
    order. Every transaction lands in exactly one order. Pace for
    single-piece orders falls back to the mean gap between consecutive
    same-(broker, sign) transactions over the whole series, then to the
    set-wide mean gap.
    """
    if window < 1:
        raise DomainError("window must be >= 1")
    n = len(series)
    open_chain: dict[tuple[str, int], int] = {}
    last_seen: dict[tuple[str, int], int] = {}
    key_gap_sum: dict[tuple[str, int], int] = {}
    key_gap_cnt: dict[tuple[str, int], int] = {}
    pieces: list[list[int]] = []
    chain_sign: list[int] = []
    chain_vsum: list[float] = []
    chain_key: list[tuple[str, int]] = []

    signs = series.signs
    vols = series.volumes
    for i in range(n):
        key = (series.brokers[i], int(signs[i]))
        if key in last_seen:
            key_gap_sum[key] = key_gap_sum.get(key, 0) + (i - last_seen[key])
            key_gap_cnt[key] = key_gap_cnt.get(key, 0) + 1
        prev = open_chain.get(key)
        if prev is not None and i - pieces[prev][-1] <= window:
            pieces[prev].append(i)
            chain_vsum[prev] += vols[i]
        else:
            open_chain[key] = len(pieces)
            pieces.append([i])
            chain_sign.append(int(signs[i]))
            chain_vsum.append(float(vols[i]))
            chain_key.append(key)
        last_seen[key] = i

    v_means = [s / len(p) for s, p in zip(chain_vsum, pieces)]
    key_mean_gap = {
        k: key_gap_sum[k] / key_gap_cnt[k] for k in key_gap_cnt if key_gap_cnt[k] > 0
    }
    thetas = [key_mean_gap.get(chain_key[j]) if len(pieces[j]) == 1 else None for j in range(len(pieces))]
    return build_order_set(pieces, chain_sign, v_means, n, thetas=thetas)


def size_samples(orders: HiddenOrderSet) -> np.ndarray:
    """Piece counts of every order, as floats, in start order."""
    return np.array([o.n for o in orders.orders], dtype=np.float64)


def signed_size_acf(orders: HiddenOrderSet, max_lag: int) -> estimators.AcfEstimate:
    """ACF of the signed size sequence sign*N ordered by order start time."""
    x = np.array([o.sign * o.n for o in orders.orders], dtype=np.float64)
    return estimators.acf(x, max_lag)


def activity_at(orders: HiddenOrderSet, i: int, mode: str = "hindsight", timeout: int = 100) -> list[ActiveOrder]:
    """Orders active at transaction index i, with their state just before i.

    The state is what a predictor knows before transaction i executes, so
    n_so_far counts pieces strictly before i and an order first appears one
    step after its first piece. Hindsight mode knows completion times: an
    order stays active through its last piece and its pace estimate is the
    order's realized pace. Causal mode knows only the past: an order stays
    active while its most recent piece is within ``timeout`` transactions,
    so a finished order keeps its influence until the timeout lapses; the
    pace estimate is (last piece - start)/(n_so_far - 1), falling back to
    the set-wide mean gap for a single observed piece.
    """
    if mode not in ("hindsight", "causal"):
        raise DomainError(f"mode must be hindsight or causal, got {mode!r}")
    if i < 0 or i >= orders.n_transactions:
        raise IndexOutOfRange(f"index {i} outside series of length {orders.n_transactions}")

    out: list[ActiveOrder] = []
    for o in orders.orders:
        if o.start >= i:
            continue
        n_so_far = int(np.searchsorted(o.piece_times, i, side="left"))
        last = int(o.piece_times[n_so_far - 1])
        if mode == "hindsight":
            if i > o.end:
                continue
            theta_est = o.theta
        else:
            if i - last > timeout:
                continue
            theta_est = (last - o.start) / (n_so_far - 1) if n_so_far >= 2 else orders.mean_gap
        out.append(ActiveOrder(o.order_id, n_so_far, theta_est, o.sign, o.v_mean))
    return out


ORDERS_HEADER = ("order_id", "sign", "N", "v_mean", "theta", "t_start", "t_end")
PIECE_MAP_HEADER = ("i", "order_id", "n")


def write_orders_csv(orders: HiddenOrderSet, dest) -> None:
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", newline="") if own else dest
    try:
        fh.write(",".join(ORDERS_HEADER) + "\n")
        for o in orders.orders:
            fh.write(f"{o.order_id},{o.sign},{o.n},{o.v_mean!r},{o.theta!r},{o.start},{o.end}\n")
    finally:
        if own:
            fh.close()


def write_piece_map_csv(orders: HiddenOrderSet, dest) -> None:
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", newline="") if own else dest
    try:
        fh.write(",".join(PIECE_MAP_HEADER) + "\n")
        for i in range(orders.n_transactions):
            fh.write(f"{i},{int(orders.order_of[i])},{int(orders.piece_no[i])}\n")
    finally:
        if own:
            fh.close()


def read_orders_csv(source) -> list[dict]:
    """Read an orders export back as plain dicts (sizes, pace, spans)."""
    own = isinstance(source, (str, Path))
    fh = open(source, "r", newline="") if own else source
    try:
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            rows.append(
                dict(
                    order_id=int(row["order_id"]),
                    sign=int(row["sign"]),
                    n=int(row["N"]),
                    v_mean=float(row["v_mean"]),
                    theta=float(row["theta"]),
                    t_start=int(row["t_start"]),
                    t_end=int(row["t_end"]),
                )
            )
        return rows
    finally:
        if own:
            fh.close()
