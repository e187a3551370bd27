"""Market-efficiency diagnostics on a transaction series.

Everything here conditions future signs and returns on something known
earlier: the realized sign k back, or a causal predictor's sign. The
conditional tables feed imbalance ratios and cumulative impact curves; the
decay profile and the completed-order response measure whether hidden-order
impact is permanent.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import liquidity
from .errors import (
    DomainError,
    MissingLagZero,
    SeriesTooShort,
    TooFewLargeOrders,
    TooFewObservations,
    TooFewQualifyingPairs,
)
from .hidden_orders import HiddenOrderSet
from .orderflow import ReturnSeries, TransactionSeries


@dataclass(frozen=True)
class ImbalanceTable:
    """Per-lag sign and return statistics conditioned on an earlier sign.

    Row k compares the sign at i+k with the conditioning sign at i. p_plus
    is the probability they agree (ties in the conditioner excluded from the
    denominator and counted in n_ties). r and l columns are means of the
    directed return eps*r and directed initial impact eps*l at i+k, split by
    agreement, with per-cell sample standard errors.
    """

    conditioner: str
    lags: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    r_plus: np.ndarray
    r_minus: np.ndarray
    l_plus: np.ndarray
    l_minus: np.ndarray
    n_same: np.ndarray
    n_opp: np.ndarray
    n_ties: np.ndarray
    r_plus_se: np.ndarray
    r_minus_se: np.ndarray

    def __len__(self) -> int:
        return int(self.lags.size)


class ImbalanceRatios(NamedTuple):
    """The three per-lag imbalance ratios with propagated standard errors."""

    lags: np.ndarray
    transaction: np.ndarray
    transaction_se: np.ndarray
    ret: np.ndarray
    ret_se: np.ndarray
    liquidity: np.ndarray


@dataclass(frozen=True)
class ImpactCurve:
    """Cumulative response I, sign-only response I_N, liquidity response I_L."""

    horizons: np.ndarray
    i: np.ndarray
    i_n: np.ndarray
    i_l: np.ndarray
    i_o: float


@dataclass(frozen=True)
class ResponseCurve:
    """Buyer/seller mean returns binned by the k-step-ahead sign predictor."""

    k: int
    eps_hat_center: np.ndarray
    r_plus: np.ndarray
    r_minus: np.ndarray
    r_plus_se: np.ndarray
    r_minus_se: np.ndarray
    ratio: np.ndarray
    theory: np.ndarray
    count: np.ndarray


@dataclass(frozen=True)
class DecayProfile:
    """Mean cumulative impact of large hidden orders around completion.

    The pre phase is sampled at 20 equidistant fractions of each order's own
    duration, so orders of different lengths align; its lags are rescaled to
    the sample mean duration for plotting. The post phase is raw lags after
    the last piece.

    post_drift is the flatness statistic: the mean per-step directed return
    over the full post window, one value per order, averaged with its
    standard error across orders. Adjacent post_mean points share nearly all
    their orders, so a regression on the curve badly overstates precision;
    test flatness against post_drift_se instead.
    """

    pre_k: np.ndarray
    pre_mean: np.ndarray
    pre_se: np.ndarray
    post_k: np.ndarray
    post_mean: np.ndarray
    post_se: np.ndarray
    n_min: int
    order_count: int
    mean_duration: float
    post_drift: float
    post_drift_se: float
    post_drift_orders: int


class PhiResponse(NamedTuple):
    """Directed mean return following transactions of completed orders."""

    value: float
    stderr: float
    n_pairs: int


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return float("nan"), float("nan")
    m = float(values.mean())
    if values.size < 2:
        return m, float("nan")
    return m, float(values.std(ddof=1) / np.sqrt(values.size))


def mean_initial_impact(returns: ReturnSeries) -> float:
    """Unconditional mean absolute immediate impact, the I_o scale."""
    return float(np.mean(np.abs(returns.l)))


def conditional_table(
    series: TransactionSeries,
    returns: ReturnSeries,
    conditioner: str = "actual-sign",
    k_max: int = 100,
    *,
    coeffs: liquidity.ArCoefficients | None = None,
    orders: HiddenOrderSet | None = None,
    alpha: float | None = None,
    mode: str = "causal",
    timeout: int = 100,
    jobs: int = 1,
) -> ImbalanceTable:
    """Sign agreement and conditional directed returns at lags 0..k_max.

    The conditioning sign at i is the actual sign, or the sign of a causal
    predictor evaluated just before i. Lag 0 is included so cumulative
    curves can start at the own-transaction term; under actual-sign
    conditioning that row is exactly p_plus=1 with the unconditional
    directed return.

    jobs > 1 splits the lag rows across threads; each row lands in its own
    slot, so the result is identical to the serial one.
    """
    n = len(series)
    if n <= k_max + 1:
        raise SeriesTooShort(f"need more than {k_max + 1} transactions, got {n}")
    if conditioner == "actual-sign":
        cond = series.signs.astype(np.float64)
    elif conditioner == "predictorE1":
        if coeffs is None:
            raise DomainError("predictorE1 conditioning needs coeffs")
        _, cond = liquidity.e1_traces(series.signs, np.zeros(n), coeffs)
    elif conditioner == "predictorE2":
        if orders is None or alpha is None:
            raise DomainError("predictorE2 conditioning needs orders and alpha")
        _, cond = liquidity.e2_traces(orders, alpha, mode=mode, timeout=timeout)
    else:
        raise DomainError(f"unknown conditioner {conditioner!r}")

    s = np.sign(cond)
    eps = series.signs[: n - 1].astype(np.float64)
    r_dir = eps * returns.r
    l_dir = eps * returns.l

    lags = np.arange(0, k_max + 1, dtype=np.int64)
    cols = {
        name: np.full(lags.size, np.nan)
        for name in ("p_plus", "p_minus", "r_plus", "r_minus", "l_plus", "l_minus", "r_plus_se", "r_minus_se")
    }
    n_same = np.zeros(lags.size, dtype=np.int64)
    n_opp = np.zeros(lags.size, dtype=np.int64)
    n_ties = np.zeros(lags.size, dtype=np.int64)

    def fill(ix: int) -> None:
        k = int(lags[ix])
        m = n - 1 - k
        sk = s[:m]
        ek = eps[k : k + m]
        tie = sk == 0
        same = (sk == ek) & ~tie
        opp = (sk == -ek) & ~tie
        n_same[ix] = int(same.sum())
        n_opp[ix] = int(opp.sum())
        n_ties[ix] = int(tie.sum())
        used = n_same[ix] + n_opp[ix]
        if used > 0:
            cols["p_plus"][ix] = n_same[ix] / used
            cols["p_minus"][ix] = n_opp[ix] / used
        rk = r_dir[k : k + m]
        lk = l_dir[k : k + m]
        cols["r_plus"][ix], cols["r_plus_se"][ix] = _mean_se(rk[same])
        cols["r_minus"][ix], cols["r_minus_se"][ix] = _mean_se(rk[opp])
        cols["l_plus"][ix], _ = _mean_se(lk[same])
        cols["l_minus"][ix], _ = _mean_se(lk[opp])

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(fill, range(lags.size)))
    else:
        for ix in range(lags.size):
            fill(ix)

    return ImbalanceTable(
        conditioner=conditioner,
        lags=lags,
        n_same=n_same,
        n_opp=n_opp,
        n_ties=n_ties,
        **cols,
    )


def imbalance_ratios(table: ImbalanceTable) -> ImbalanceRatios:
    """p+/p-, r-/r+, l-/l+ per lag; NaN where a denominator is unusable.

    Standard errors by linear propagation: binomial for the transaction
    ratio, independent-cell delta method for the return ratio.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        trans = np.where(table.p_minus > 0, table.p_plus / table.p_minus, np.nan)
        ret = np.where(table.r_plus > 0, table.r_minus / table.r_plus, np.nan)
        liq = np.where(table.l_plus > 0, table.l_minus / table.l_plus, np.nan)
        pairs = (table.n_same + table.n_opp).astype(np.float64)
        p_se = np.sqrt(table.p_plus * table.p_minus / np.maximum(pairs, 1.0))
        trans_se = np.where(table.p_minus > 0, p_se / table.p_minus**2, np.nan)
        rel = np.sqrt(
            (table.r_minus_se / table.r_minus) ** 2 + (table.r_plus_se / table.r_plus) ** 2
        )
        ret_se = np.abs(ret) * rel
    return ImbalanceRatios(
        lags=table.lags,
        transaction=trans,
        transaction_se=trans_se,
        ret=ret,
        ret_se=ret_se,
        liquidity=liq,
    )


def cumulative_impacts(table: ImbalanceTable, i_o: float, t_max: int) -> ImpactCurve:
    """Prefix sums of the conditional rows: full, sign-only, and liquidity.

    Cells with no observations contribute zero. Requires the table to start
    at lag 0 and to reach t_max.
    """
    if table.lags.size == 0 or table.lags[0] != 0:
        raise MissingLagZero("cumulative curves need the lag-0 row")
    if t_max > int(table.lags[-1]):
        raise DomainError(f"t_max {t_max} beyond table range {int(table.lags[-1])}")
    sl = slice(0, t_max + 1)
    pr_plus = np.where(table.n_same[sl] > 0, table.p_plus[sl] * table.r_plus[sl], 0.0)
    pr_minus = np.where(table.n_opp[sl] > 0, table.p_minus[sl] * table.r_minus[sl], 0.0)
    pl_plus = np.where(table.n_same[sl] > 0, table.p_plus[sl] * table.l_plus[sl], 0.0)
    pl_minus = np.where(table.n_opp[sl] > 0, table.p_minus[sl] * table.l_minus[sl], 0.0)
    dp = np.where(
        table.n_same[sl] + table.n_opp[sl] > 0, table.p_plus[sl] - table.p_minus[sl], 0.0
    )
    return ImpactCurve(
        horizons=table.lags[sl].copy(),
        i=np.cumsum(pr_plus - pr_minus),
        i_n=i_o * np.cumsum(dp),
        i_l=np.cumsum(pl_plus - pl_minus),
        i_o=i_o,
    )


def response_curves(
    series: TransactionSeries,
    returns: ReturnSeries,
    orders: HiddenOrderSet,
    alpha: float,
    k: int,
    bins: int = 20,
    mode: str = "hindsight",
    timeout: int = 100,
) -> ResponseCurve:
    """Buyer and seller mean returns at i+k, binned by the sign predictor.

    The predictor at i extends each active order's continuation to the piece
    it would reach k transactions later. Bins hold equal counts. The theory
    column is (1-e)/(1+e) at the bin's mean predictor value.
    """
    n = len(series)
    _, eps_hat = liquidity.e2_traces(orders, alpha, mode=mode, timeout=timeout, horizon=k)
    m = n - 1 - k
    if m < bins:
        raise TooFewObservations(f"{m} usable pairs for {bins} bins")
    x = eps_hat[:m]
    eps = series.signs[k : k + m].astype(np.float64)
    r = returns.r[k : k + m]

    order_ix = np.argsort(x, kind="stable")
    chunks = np.array_split(order_ix, bins)
    center = np.empty(bins)
    r_plus = np.empty(bins)
    r_minus = np.empty(bins)
    r_plus_se = np.empty(bins)
    r_minus_se = np.empty(bins)
    count = np.zeros(bins, dtype=np.int64)
    for b, ix in enumerate(chunks):
        center[b] = float(x[ix].mean())
        buys = ix[eps[ix] > 0]
        sells = ix[eps[ix] < 0]
        r_plus[b], r_plus_se[b] = _mean_se(r[buys])
        r_minus[b], r_minus_se[b] = _mean_se(-r[sells])
        count[b] = ix.size
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r_minus != 0, r_plus / r_minus, np.nan)
        theory = np.where(
            np.abs(center) < 1.0, (1.0 - center) / (1.0 + center), np.nan
        )
    return ResponseCurve(
        k=k,
        eps_hat_center=center,
        r_plus=r_plus,
        r_minus=r_minus,
        r_plus_se=r_plus_se,
        r_minus_se=r_minus_se,
        ratio=ratio,
        theory=theory,
        count=count,
    )


def decay_profile(
    series: TransactionSeries,
    returns: ReturnSeries,
    orders: HiddenOrderSet,
    n_min: int = 20,
    post_k: int = 500,
) -> DecayProfile:
    """Average cumulative impact of large orders before and after completion.

    Each order's directed cumulative return is sampled at 20 fractions of
    its own duration, then at raw lags 1..post_k past its last piece. Orders
    ending too close to the series edge drop out of the lags they cannot
    reach, so late-lag averages rest on fewer orders.
    """
    n = len(series)
    csum = np.concatenate(([0.0], np.cumsum(returns.r)))
    big = [o for o in orders.orders if o.n >= n_min and o.end <= n - 2]
    if len(big) < 30:
        raise TooFewLargeOrders(f"{len(big)} orders with N >= {n_min}, need 30")

    starts = np.array([o.start for o in big], dtype=np.int64)
    ends = np.array([o.end for o in big], dtype=np.int64)
    sgn = np.array([o.sign for o in big], dtype=np.float64)
    durations = (ends - starts).astype(np.float64)
    mean_d = float(durations.mean())

    pre_mean = np.empty(20)
    pre_se = np.empty(20)
    for m in range(1, 21):
        u = starts + np.rint(m * durations / 20.0).astype(np.int64)
        vals = sgn * (csum[u + 1] - csum[starts])
        pre_mean[m - 1], pre_se[m - 1] = _mean_se(vals)
    pre_k = np.array(
        [-int(round(mean_d * (20 - m) / 20.0)) for m in range(1, 21)], dtype=np.int64
    )

    post_lags = np.arange(1, post_k + 1, dtype=np.int64)
    post_mean = np.full(post_k, np.nan)
    post_se = np.full(post_k, np.nan)
    for ix, k in enumerate(post_lags):
        ok = ends + k <= n - 2
        if not ok.any():
            continue
        u = ends[ok] + k
        vals = sgn[ok] * (csum[u + 1] - csum[starts[ok]])
        post_mean[ix], post_se[ix] = _mean_se(vals)

    full = ends + post_k <= n - 2
    if full.any():
        per_order = sgn[full] * (csum[ends[full] + post_k + 1] - csum[ends[full] + 1]) / post_k
        drift, drift_se = _mean_se(per_order)
        drift_orders = int(full.sum())
    else:
        drift, drift_se, drift_orders = float("nan"), float("nan"), 0

    return DecayProfile(
        pre_k=pre_k,
        pre_mean=pre_mean,
        pre_se=pre_se,
        post_k=post_lags,
        post_mean=post_mean,
        post_se=post_se,
        n_min=n_min,
        order_count=len(big),
        mean_duration=mean_d,
        post_drift=drift,
        post_drift_se=drift_se,
        post_drift_orders=drift_orders,
    )


def phi_conditioned_response(
    series: TransactionSeries,
    returns: ReturnSeries,
    orders: HiddenOrderSet,
    k: int,
) -> PhiResponse:
    """Mean return at i in the direction of the sign at i-k, given that the
    order behind i-k finished before i. Near zero means the information in a
    completed order is already in the price; negative means it leaks back
    out."""
    n = len(series)
    if k < 1 or k > n - 2:
        raise DomainError(f"k must be in [1, {n - 2}], got {k}")
    ends_by_id = np.array([o.end for o in orders.orders], dtype=np.int64)
    i = np.arange(k, n - 1)
    prev = i - k
    done = ends_by_id[orders.order_of[prev]] < i
    vals = series.signs[prev[done]] * returns.r[i[done]]
    if vals.size < 2:
        raise TooFewQualifyingPairs(f"{vals.size} qualifying pairs at k={k}")
    m, se = _mean_se(vals)
    return PhiResponse(value=m, stderr=se, n_pairs=int(vals.size))


# --- delimited outputs ------------------------------------------------------

TABLE_HEADER = ("k", "p_plus", "p_minus", "r_plus", "r_minus", "l_plus", "l_minus", "n_same", "n_opp")
CURVE_HEADER = ("T", "I", "I_N", "I_L")
RESPONSE_HEADER = ("bin_center", "r_plus", "r_minus", "ratio", "theory", "count")
DECAY_HEADER = ("k", "mean_impact", "stderr", "phase")


def _open_dest(dest):
    if isinstance(dest, (str, Path)):
        return open(dest, "w", newline=""), True
    return dest, False


def _r(x) -> str:
    return repr(float(x))


def write_table_csv(table: ImbalanceTable, dest) -> None:
    fh, own = _open_dest(dest)
    try:
        fh.write(",".join(TABLE_HEADER) + "\n")
        for ix in range(len(table)):
            fh.write(
                f"{int(table.lags[ix])},{_r(table.p_plus[ix])},{_r(table.p_minus[ix])},"
                f"{_r(table.r_plus[ix])},{_r(table.r_minus[ix])},"
                f"{_r(table.l_plus[ix])},{_r(table.l_minus[ix])},"
                f"{int(table.n_same[ix])},{int(table.n_opp[ix])}\n"
            )
    finally:
        if own:
            fh.close()


def write_curve_csv(curve: ImpactCurve, dest) -> None:
    fh, own = _open_dest(dest)
    try:
        fh.write(",".join(CURVE_HEADER) + "\n")
        for ix in range(curve.horizons.size):
            fh.write(
                f"{int(curve.horizons[ix])},{_r(curve.i[ix])},{_r(curve.i_n[ix])},{_r(curve.i_l[ix])}\n"
            )
    finally:
        if own:
            fh.close()


def write_response_csv(curve: ResponseCurve, dest) -> None:
    fh, own = _open_dest(dest)
    try:
        fh.write(",".join(RESPONSE_HEADER) + "\n")
        for ix in range(curve.count.size):
            fh.write(
                f"{_r(curve.eps_hat_center[ix])},{_r(curve.r_plus[ix])},{_r(curve.r_minus[ix])},"
                f"{_r(curve.ratio[ix])},{_r(curve.theory[ix])},{int(curve.count[ix])}\n"
            )
    finally:
        if own:
            fh.close()


def write_decay_csv(profile: DecayProfile, dest) -> None:
    fh, own = _open_dest(dest)
    try:
        fh.write(",".join(DECAY_HEADER) + "\n")
        for ix in range(20):
            fh.write(
                f"{int(profile.pre_k[ix])},{_r(profile.pre_mean[ix])},{_r(profile.pre_se[ix])},pre\n"
            )
        for ix in range(profile.post_k.size):
            fh.write(
                f"{int(profile.post_k[ix])},{_r(profile.post_mean[ix])},{_r(profile.post_se[ix])},post\n"
            )
    finally:
        if own:
            fh.close()
