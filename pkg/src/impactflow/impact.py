"""One-transaction impact function and the hidden-order impact laws.

The one-transaction impact function f(v) = f1 * v**f2 maps transacted volume
to the expected directed return of a single transaction. The two impact laws
give the expected total return of a hidden order of N pieces executed at pace
theta: the autoregressive rule (mode E1) predicts transient impact growing as
N**(1-phi) and decaying afterwards, the active-order rule (mode E2) predicts
permanent impact growing as log(1+N) with no pace dependence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaOutOfRange,
    DomainError,
    MisalignedInputs,
    PhiOutOfRange,
    TooFewObservations,
)


@dataclass(frozen=True)
class ImpactFunction:
    """Concave power-law impact of one transaction, f(v) = f1 * v**f2."""

    f1: float
    f2: float

    def __post_init__(self):
        if not (self.f1 > 0 and np.isfinite(self.f1)):
            raise DomainError("f1 must be positive and finite")
        if not (0 <= self.f2 < 1):
            raise DomainError("f2 must lie in [0, 1)")

    def __call__(self, volume):
        return self.f1 * np.power(volume, self.f2)


@dataclass(frozen=True)
class ImpactFnFit:
    """Binned fit diagnostics around a fitted ImpactFunction."""

    fn: ImpactFunction
    bin_centers: np.ndarray
    bin_means: np.ndarray
    bin_counts: np.ndarray
    used: np.ndarray
    n_observations: int


def _binned_impact_fit(volumes, directed, bins, min_count, min_total) -> ImpactFnFit:
    n = volumes.size
    if n < min_total:
        raise TooFewObservations(f"{n} observations, need {min_total}")
    lo, hi = volumes.min(), volumes.max()
    if lo == hi:
        raise TooFewObservations("volumes are all identical, cannot bin")
    edges = np.geomspace(lo, hi, bins + 1)
    edges[-1] = np.nextafter(edges[-1], np.inf)
    idx = np.digitize(volumes, edges) - 1
    idx = np.clip(idx, 0, bins - 1)

    counts = np.bincount(idx, minlength=bins)
    sums = np.bincount(idx, weights=directed, minlength=bins)
    vol_sums = np.bincount(idx, weights=volumes, minlength=bins)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        centers = np.where(counts > 0, vol_sums / np.maximum(counts, 1), np.nan)

    used = (counts >= min_count) & (means > 0)
    if used.sum() < 2:
        raise TooFewObservations(
            f"only {int(used.sum())} usable volume bins (count >= {min_count}, positive mean)"
        )
    slope, intercept = np.polyfit(np.log(centers[used]), np.log(means[used]), 1)
    fn = ImpactFunction(f1=float(np.exp(intercept)), f2=float(np.clip(slope, 0.0, np.nextafter(1.0, 0.0))))
    return ImpactFnFit(
        fn=fn,
        bin_centers=centers,
        bin_means=means,
        bin_counts=counts,
        used=used,
        n_observations=n,
    )


def fit_impact_function(series, returns, bins: int = 30) -> ImpactFnFit:
    """Fit f(v) from the volume-binned mean of directed returns sign*r.

    Volumes are split into log-spaced bins; bins with fewer than 20
    observations or a nonpositive mean are excluded from the log-log
    least-squares line (their counts stay in the diagnostics).
    """
    if len(returns) != len(series) - 1:
        raise MisalignedInputs("returns do not match the transaction series")
    m = len(returns)
    directed = series.signs[:m] * returns.r
    return _binned_impact_fit(series.volumes[:m], directed, bins, 20, 10 * bins)


def fit_impact_nonzero(series, returns, bins: int = 30) -> ImpactFnFit:
    """Fit f(v) using only transactions whose initial impact l is nonzero.

    Most transactions leave the midprice unchanged; conditioning on l != 0
    isolates the magnitude of impact when it occurs, so a rising full fit
    together with a flat nonzero fit indicates volume raises the probability
    of impact rather than its size.
    """
    if len(returns) != len(series) - 1:
        raise MisalignedInputs("returns do not match the transaction series")
    m = len(returns)
    mask = returns.l != 0.0
    if int(mask.sum()) < 1000:
        raise TooFewObservations(f"{int(mask.sum())} nonzero-impact transactions, need 1000")
    directed = series.signs[:m][mask] * returns.r[mask]
    return _binned_impact_fit(series.volumes[:m][mask], directed, bins, 20, 1000)


def impact_e1(sign: int, volume: float, theta: float, n_pieces: int, phi: float, fn: ImpactFunction) -> float:
    """Expected total return of a hidden order under the autoregressive rule.

    Grows as n_pieces**(1-phi) and shrinks with pace as theta**(-phi): slower
    execution of the same order moves the price less while it lasts.
    """
    if not 0 < phi < 0.5:
        raise PhiOutOfRange(f"phi={phi!r} outside (0, 0.5)")
    if theta < 1:
        raise DomainError("theta must be >= 1")
    if n_pieces < 1:
        raise DomainError("n_pieces must be >= 1")
    return sign * fn(volume) / (1.0 - phi) * theta ** (-phi) * n_pieces ** (1.0 - phi)


def impact_e2(sign: int, volume: float, n_pieces: int, alpha: float, fn: ImpactFunction) -> float:
    """Expected total return of a hidden order under the active-order rule.

    Grows as log(1 + n_pieces), independent of pace: the impact is permanent
    and set only by how much of the size distribution the order has revealed.
    """
    if alpha <= 1:
        raise AlphaOutOfRange(f"alpha={alpha!r} must exceed 1")
    if n_pieces < 0:
        raise DomainError("n_pieces must be >= 0")
    return alpha * sign * fn(volume) * float(np.log1p(n_pieces))


@dataclass(frozen=True)
class HiddenOrderImpactCurve:
    """Scaled hidden-order return binned by size, with the matching law."""

    sizes: np.ndarray
    mean_scaled_return: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    mode: str
    theory: np.ndarray


def _size_bin_edges(n_max: int) -> np.ndarray:
    edges = [float(k) for k in range(1, 12)]
    if n_max >= 11:
        top = np.geomspace(11.0, n_max + 1.0, max(int(np.ceil(np.log10(max(n_max, 11) / 10.0) * 8)), 2) + 1)
        edges.extend(top[1:].tolist())
    edges[-1] = max(edges[-1], n_max + 1.0)
    return np.asarray(edges)


def empirical_hidden_order_curve(series, returns, orders, mode: str, exponents, fn: ImpactFunction) -> HiddenOrderImpactCurve:
    """Measure the hidden-order impact curve and sample the matching law.

    Each order's return R runs from the midprice just before its first piece
    to just after its last piece. R is rescaled per order so both rules
    predict a pure function of N: by theta**phi * (1-phi) / (sign * f(v)) in
    E1 mode, by 1 / (alpha * sign * f(v)) in E2 mode. Sizes use integer bins
    through 10 and log-spaced bins above; bin centers are within-bin mean
    sizes and the theory column is the law sampled at those centers. Bins
    with fewer than 2 orders report a missing (NaN) standard error.
    """
    if len(returns) != len(series) - 1:
        raise MisalignedInputs("returns do not match the transaction series")
    mode = mode.upper()
    if mode not in ("E1", "E2"):
        raise DomainError(f"mode must be E1 or E2, got {mode!r}")
    if orders.n_transactions != len(series):
        raise MisalignedInputs("orders were reconstructed from a different series")

    sizes = np.array([o.n for o in orders.orders], dtype=np.float64)
    starts = np.array([o.start for o in orders.orders], dtype=np.int64)
    ends = np.array([o.end for o in orders.orders], dtype=np.int64)
    signs = np.array([o.sign for o in orders.orders], dtype=np.float64)
    v_means = np.array([o.v_mean for o in orders.orders], dtype=np.float64)
    thetas = np.array([o.theta for o in orders.orders], dtype=np.float64)

    big_r = series.log_mid_post[ends] - series.log_mid_pre[starts]
    if mode == "E1":
        phi = exponents.phi
        if not 0 < phi < 0.5:
            raise PhiOutOfRange(f"phi={phi!r} outside (0, 0.5)")
        scaled = big_r * thetas**phi * (1.0 - phi) / (signs * fn(v_means))
    else:
        alpha = exponents.alpha
        if alpha <= 1:
            raise AlphaOutOfRange(f"alpha={alpha!r} must exceed 1")
        scaled = big_r / (alpha * signs * fn(v_means))

    edges = _size_bin_edges(int(sizes.max()))
    idx = np.digitize(sizes, edges) - 1
    nbins = edges.size - 1
    centers, means, errs, counts = [], [], [], []
    for b in range(nbins):
        sel = idx == b
        c = int(sel.sum())
        if c == 0:
            continue
        vals = scaled[sel]
        centers.append(float(sizes[sel].mean()))
        means.append(float(vals.mean()))
        errs.append(float(vals.std(ddof=1) / np.sqrt(c)) if c > 1 else float("nan"))
        counts.append(c)

    centers = np.asarray(centers)
    if mode == "E1":
        theory = centers ** (1.0 - exponents.phi)
    else:
        theory = np.log1p(centers)
    return HiddenOrderImpactCurve(
        sizes=centers,
        mean_scaled_return=np.asarray(means),
        stderr=np.asarray(errs),
        counts=np.asarray(counts, dtype=np.int64),
        mode=mode,
        theory=theory,
    )
