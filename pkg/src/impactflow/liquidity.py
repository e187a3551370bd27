"""Liquidity predictors and the sign-probability map.

Two predictors bound the expected next impact: E1 regresses on the recent
signed impacts with power-law weights, E2 sums the expected contribution of
every active hidden order. Both come with vectorized whole-series traces
that the simulator and the diagnostics share.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve

from .errors import (
    BadOrderState,
    DegenerateCertainty,
    DomainError,
    EmptyHistory,
    EpsHatOutOfRange,
    PhiOutOfRange,
)
from .hidden_orders import ActiveOrder, HiddenOrderSet


@dataclass(frozen=True)
class ArCoefficients:
    """Power-law autoregressive weights a_k = phi * k^(-1-phi), k = 1..K."""

    phi: float
    k_max: int
    a: np.ndarray
    normalized: bool


def ar_coefficients(phi: float, k_max: int = 1000, normalize: bool = False) -> ArCoefficients:
    """Weights a_k = phi*k^(-1-phi); optionally rescaled to sum to one.

    The unnormalized weights sum to about 1 for large K (the integral of the
    density is exactly 1), but the sum exceeds 1 at any finite K because the
    discrete sum dominates the integral. Normalization makes the all-buy
    prediction saturate at exactly 1.
    """
    if not 0 < phi < 0.5:
        raise PhiOutOfRange(f"phi must be in (0, 0.5), got {phi}")
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    k = np.arange(1, k_max + 1, dtype=np.float64)
    a = phi * k ** (-1.0 - phi)
    if normalize:
        a = a / a.sum()
    a.setflags(write=False)
    return ArCoefficients(phi=phi, k_max=k_max, a=a, normalized=normalize)


@dataclass
class LiquidityPredictorState:
    """What a predictor knows just before a transaction.

    E1 holds a bounded history of recent signs and signed impacts (newest
    last) plus the weights; E2 holds the active-order view with alpha and
    the impact function.
    """

    mode: str
    coeffs: ArCoefficients | None = None
    signs: deque = field(default_factory=deque)
    impacts: deque = field(default_factory=deque)
    active: list[ActiveOrder] = field(default_factory=list)
    alpha: float | None = None
    fn: Callable[[float], float] | None = None

    def push(self, sign: int, f_v: float) -> None:
        """Record one executed transaction (E1 mode only)."""
        if self.mode != "E1":
            raise DomainError("push only applies to E1 state")
        self.signs.append(sign)
        self.impacts.append(sign * f_v)


def e1_state(coeffs: ArCoefficients) -> LiquidityPredictorState:
    return LiquidityPredictorState(
        mode="E1",
        coeffs=coeffs,
        signs=deque(maxlen=coeffs.k_max),
        impacts=deque(maxlen=coeffs.k_max),
    )


def e2_state(active, alpha: float, fn: Callable[[float], float]) -> LiquidityPredictorState:
    return LiquidityPredictorState(mode="E2", active=list(active), alpha=alpha, fn=fn)


def lambda_e1(state: LiquidityPredictorState, coeffs: ArCoefficients | None = None) -> float:
    """Predicted next impact from the E1 history: sum of a_k * eps*f(v) at lag k."""
    a = (coeffs or state.coeffs).a
    m = len(state.impacts)
    if m == 0:
        raise EmptyHistory("E1 predictor needs at least one past transaction")
    past = np.fromiter(reversed(state.impacts), dtype=np.float64, count=m)
    m = min(m, a.size)
    return float(np.dot(a[:m], past[:m]))


def _check_active(active) -> None:
    for o in active:
        if o.n_so_far < 1 or o.theta_estimate < 1:
            raise BadOrderState(
                f"order {o.order_id}: n={o.n_so_far}, theta={o.theta_estimate}"
            )


def lambda_e2(state, alpha: float | None = None, fn: Callable | None = None) -> float:
    """Predicted next impact from active orders.

    Each order expected to continue contributes its continuation probability
    times its per-transaction impact rate eps*f(v)/theta. Accepts either an
    E2 state or a bare iterable of active orders plus alpha and fn.
    """
    if isinstance(state, LiquidityPredictorState):
        active, alpha, fn = state.active, state.alpha, state.fn
    else:
        active = state
    _check_active(active)
    total = 0.0
    for o in active:
        total += (o.n_so_far / (o.n_so_far + 1)) ** alpha * o.sign * fn(o.v_mean) / o.theta_estimate
    return total


def continuation_probability(n: int, alpha: float) -> float:
    """Chance that an order seen to run n pieces runs at least one more."""
    return (n / (n + 1.0)) ** alpha


def predict_sign(state: LiquidityPredictorState, mode: str | None = None) -> float:
    """Real-valued expected sign of the next transaction.

    E1 averages past signs with the AR weights; E2 sums continuation
    probability times sign over active orders, scaled by each order's pace.
    The E2 value is not confined to [-1, 1]; clip before probSign.
    """
    mode = mode or state.mode
    if mode == "E1":
        a = state.coeffs.a
        m = len(state.signs)
        if m == 0:
            raise EmptyHistory("E1 predictor needs at least one past transaction")
        past = np.fromiter(reversed(state.signs), dtype=np.float64, count=m)
        m = min(m, a.size)
        return float(np.dot(a[:m], past[:m]))
    if mode == "E2":
        _check_active(state.active)
        total = 0.0
        for o in state.active:
            total += (o.n_so_far / (o.n_so_far + 1)) ** state.alpha * o.sign / o.theta_estimate
        return total
    raise DomainError(f"mode must be E1 or E2, got {mode!r}")


def predict_sign_e1(signs, coeffs: ArCoefficients) -> float:
    """predict_sign over a bare E1 sign history, oldest first."""
    state = e1_state(coeffs)
    state.signs.extend(signs)
    return predict_sign(state)


def predict_sign_e2(active, alpha: float) -> float:
    """predict_sign over a bare active-order view."""
    return predict_sign(LiquidityPredictorState(mode="E2", active=list(active), alpha=alpha))


def prob_sign(eps_hat: float) -> tuple[float, float]:
    """Map a predicted sign to (P(buy), P(sell)); the pair sums to 1 exactly."""
    if not -1.0 <= eps_hat <= 1.0:
        raise EpsHatOutOfRange(f"eps_hat must be in [-1, 1], got {eps_hat}")
    p_plus = (1.0 + eps_hat) / 2.0
    return p_plus, 1.0 - p_plus


def efficiency_ratio(eps_hat: float) -> float:
    """Ratio of expected buy return to expected sell return, (1-e)/(1+e).

    Equal to 1 in a symmetric market; tends to 0 as buys become certain,
    since perfectly anticipated trades cannot earn.
    """
    if abs(eps_hat) >= 1.0:
        raise DegenerateCertainty(f"|eps_hat| must be < 1, got {eps_hat}")
    return (1.0 - eps_hat) / (1.0 + eps_hat)


# --- whole-series traces ---------------------------------------------------
#
# The scalar functions above are the reference semantics; these compute the
# same quantities for every index at once. lambda/sign at index i condition
# on information through i-1 only, so trace[0] is always 0.


def e1_traces(
    signs: np.ndarray, f_values: np.ndarray, coeffs: ArCoefficients, horizon: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """(lambda, eps_hat) at every index from the E1 predictor.

    horizon shifts the sign predictor k transactions ahead: weights a_{k+m}
    applied to the signs known now. The lambda trace always uses horizon 0.
    """
    signs = np.asarray(signs, dtype=np.float64)
    f_values = np.asarray(f_values, dtype=np.float64)
    n = signs.size
    kern = np.concatenate(([0.0], coeffs.a))
    lam = fftconvolve(signs * f_values, kern)[:n]
    if horizon == 0:
        sig = fftconvolve(signs, kern)[:n]
    else:
        shifted = np.concatenate(([0.0], coeffs.a[horizon:]))
        sig = fftconvolve(signs, shifted)[:n]
    # FFT roundoff leaves ~1e-19 residue where the kernel has no support
    lam[0] = 0.0
    sig[0] = 0.0
    return lam, sig


def e2_traces(
    orders: HiddenOrderSet,
    alpha: float,
    fn: Callable[[float], float] | None = None,
    mode: str = "hindsight",
    timeout: int = 100,
    horizon: int = 0,
) -> tuple[np.ndarray | None, np.ndarray]:
    """(lambda, eps_hat) at every index from the active-order predictor.

    Piecewise-constant between pieces, so each order contributes a handful
    of range updates rather than per-index work. With fn None only the sign
    trace is computed. horizon extends each order's continuation to the
    piece it would reach k transactions later at its estimated pace.
    """
    if mode not in ("hindsight", "causal"):
        raise DomainError(f"mode must be hindsight or causal, got {mode!r}")
    n = orders.n_transactions
    lo_all, hi_all, wl_all, ws_all = [], [], [], []
    for o in orders.orders:
        t = o.piece_times
        if mode == "hindsight":
            if t.size < 2:
                continue
            m = np.arange(1, t.size, dtype=np.float64)
            lo = t[:-1] + 1
            hi = t[1:].astype(np.int64)
            thetas = np.full(t.size - 1, o.theta)
        else:
            m = np.arange(1, t.size + 1, dtype=np.float64)
            lo = t + 1
            hi = np.empty(t.size, dtype=np.int64)
            if t.size > 1:
                hi[:-1] = np.minimum(t[1:], t[:-1] + timeout)
            hi[-1] = t[-1] + timeout
            thetas = np.empty(t.size, dtype=np.float64)
            thetas[0] = orders.mean_gap
            if t.size > 1:
                thetas[1:] = (t[1:] - t[0]) / np.arange(1, t.size, dtype=np.float64)
        np.clip(hi, None, n - 1, out=hi)
        keep = lo <= hi
        if not keep.any():
            continue
        m, lo, hi, thetas = m[keep], lo[keep], hi[keep], thetas[keep]
        if horizon == 0:
            cont = (m / (m + 1.0)) ** alpha
        else:
            cont = (m / (m + 1.0 + np.floor(horizon / thetas))) ** alpha
        ws = cont * o.sign / thetas
        lo_all.append(lo)
        hi_all.append(hi)
        ws_all.append(ws)
        if fn is not None:
            wl_all.append((m / (m + 1.0)) ** alpha * o.sign * fn(o.v_mean) / thetas)

    sig_diff = np.zeros(n + 1)
    if lo_all:
        lo_cat = np.concatenate(lo_all)
        hi_cat = np.concatenate(hi_all) + 1
        ws_cat = np.concatenate(ws_all)
        np.add.at(sig_diff, lo_cat, ws_cat)
        np.add.at(sig_diff, hi_cat, -ws_cat)
    sig = np.cumsum(sig_diff[:n])

    if fn is None:
        return None, sig
    lam_diff = np.zeros(n + 1)
    if lo_all:
        wl_cat = np.concatenate(wl_all)
        np.add.at(lam_diff, lo_cat, wl_cat)
        np.add.at(lam_diff, hi_cat, -wl_cat)
    lam = np.cumsum(lam_diff[:n])
    return lam, sig
