"""Sample statistics of order flow: autocorrelation, power-law decay fits,
tail exponents, and the Hurst exponent with its derived exponent family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    HOutOfRange,
    InsufficientPositivePoints,
    LagTooLarge,
    SeriesTooShort,
    TooFewTailSamples,
    ZeroLogSum,
    ZeroVariance,
    DomainError,
)


@dataclass(frozen=True)
class AcfEstimate:
    """Autocorrelation values at lags 0..max_lag (biased normalization)."""

    lags: np.ndarray
    values: np.ndarray
    series_length: int


def acf(x, max_lag: int) -> AcfEstimate:
    """Autocorrelation of a series out to max_lag.

    Mean is subtracted once and the autocovariance uses the biased 1/N
    normalization, so the estimate is a positive semidefinite sequence and
    values stay inside [-1, 1]. Computed via FFT, which matches the direct
    sum to machine precision.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("acf expects a 1-d series")
    if max_lag < 1:
        raise DomainError("max_lag must be positive")
    n = x.size
    if n <= max_lag + 1:
        raise LagTooLarge(f"series of length {n} cannot support lag {max_lag}")
    xc = x - x.mean()
    if np.dot(xc, xc) == 0.0:
        raise ZeroVariance("series is constant")
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(spec * np.conj(spec), nfft)[: max_lag + 1]
    values = acov / acov[0]
    values[0] = 1.0
    lags = np.arange(max_lag + 1)
    return AcfEstimate(lags=lags, values=values, series_length=n)


def white_noise_band(n: int, z: float = 1.96) -> float:
    """Half-width of the sampling band for the ACF of an i.i.d. series."""
    return z / np.sqrt(n)


@dataclass(frozen=True)
class PowerLawFit:
    """Result of a log-log least-squares fit value ~ amplitude * lag**(-exponent)."""

    exponent: float
    amplitude: float
    lag_min: int
    lag_max: int
    points_used: int


def fit_power_law_decay(est: AcfEstimate, lag_min: int = 10, lag_max: int = 1000) -> PowerLawFit:
    """Fit a decay exponent to the positive ACF values inside [lag_min, lag_max]."""
    if lag_min < 1 or lag_max <= lag_min:
        raise DomainError("need 1 <= lag_min < lag_max")
    sel = (est.lags >= lag_min) & (est.lags <= lag_max) & (est.values > 0)
    lags = est.lags[sel]
    vals = est.values[sel]
    if lags.size < 5:
        raise InsufficientPositivePoints(
            f"only {lags.size} positive points in [{lag_min}, {lag_max}], need 5"
        )
    slope, intercept = np.polyfit(np.log(lags.astype(float)), np.log(vals), 1)
    return PowerLawFit(
        exponent=float(-slope),
        amplitude=float(np.exp(intercept)),
        lag_min=lag_min,
        lag_max=lag_max,
        points_used=int(lags.size),
    )


@dataclass(frozen=True)
class TailFit:
    """Tail exponent estimate: xi = 1 + n / sum(log(x_i / x_min))."""

    xi: float
    x_min: float
    n: int
    fraction: float


def hill_tail(samples, fraction: float = 0.0075, x_min: float | None = None) -> TailFit:
    """Tail exponent of a positive sample via the threshold log-mean.

    By default the threshold is the (1 - fraction) sample quantile, keeping
    roughly ``fraction`` of the data in the tail; the floor of 10 tail
    samples applies on this path. Passing an explicit ``x_min`` overrides
    the quantile (useful for controlled studies) and only needs 2 samples.
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise DomainError("hill_tail expects a non-empty 1-d sample")
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise DomainError("samples must be finite and positive")

    if x_min is None:
        if not 0 < fraction <= 0.05:
            raise DomainError("fraction must lie in (0, 0.05]")
        x_min = float(np.quantile(s, 1.0 - fraction))
        floor = 10
    else:
        x_min = float(x_min)
        if x_min <= 0:
            raise DomainError("x_min must be positive")
        floor = 2

    tail = s[s >= x_min]
    n = int(tail.size)
    if n < floor:
        raise TooFewTailSamples(f"{n} samples above x_min={x_min!r}, need {floor}")
    log_sum = float(np.log(tail / x_min).sum())
    if log_sum == 0.0:
        raise ZeroLogSum("all tail samples sit at x_min")
    return TailFit(xi=1.0 + n / log_sum, x_min=x_min, n=n, fraction=n / s.size)


def hurst_periodogram(signs, low_freq_fraction: float = 0.10) -> float:
    """Hurst exponent from the low-frequency slope of the periodogram.

    Fits log power against log frequency over the lowest ``low_freq_fraction``
    of the nonzero Fourier frequencies; for a long-memory series the slope is
    1 - 2H. The estimate is clipped to (0.01, 0.99). Needs at least 2**14
    points for the low-frequency band to be populated.
    """
    x = np.asarray(signs, dtype=np.float64)
    if x.size < 2**14:
        raise SeriesTooShort(f"need at least {2**14} points, got {x.size}")
    xc = x - x.mean()
    power = np.abs(np.fft.rfft(xc)) ** 2 / x.size
    n_nonzero = power.size - 1
    m = max(int(low_freq_fraction * n_nonzero), 2)
    freqs = np.arange(1, m + 1) / x.size
    band = power[1 : m + 1]
    keep = band > 0
    if keep.sum() < 2:
        raise ZeroVariance("periodogram is degenerate in the fit band")
    slope, _ = np.polyfit(np.log(freqs[keep]), np.log(band[keep]), 1)
    h = (1.0 - slope) / 2.0
    return float(np.clip(h, 0.01, 0.99))


@dataclass(frozen=True)
class ExponentSet:
    """The exponent family tied to a Hurst exponent of the sign series.

    gamma is the sign-ACF decay exponent, alpha the size-tail exponent of the
    hidden-order distribution, phi the memory exponent of the autoregressive
    liquidity rule.
    """

    h: float
    gamma: float
    alpha: float
    phi: float


def derive_exponents(h: float) -> ExponentSet:
    """Map a Hurst exponent in (0.5, 1) to (gamma, alpha, phi)."""
    if not 0.5 < h < 1.0:
        raise HOutOfRange(f"h={h!r} outside (0.5, 1)")
    return ExponentSet(h=h, gamma=2.0 - 2.0 * h, alpha=3.0 - 2.0 * h, phi=h - 0.5)
