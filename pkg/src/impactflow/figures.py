"""Figure rendering for the batch reports.

Everything draws through the Agg backend with fixed metadata so repeated
runs produce identical bytes. Each function writes one PNG next to the
delimited output it illustrates.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt
import numpy as np

_META = {"Software": "impactflow"}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)


def fig_acf(lags, curves: dict, band: float, path) -> None:
    """Log-log autocorrelations with the white-noise band."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, values in curves.items():
        v = np.asarray(values)[1:]
        ax.loglog(np.asarray(lags)[1:], np.abs(v), lw=1, label=label)
    ax.axhline(band, color="grey", ls="--", lw=1, label="white-noise band")
    ax.set_xlabel("lag")
    ax.set_ylabel("|autocorrelation|")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def fig_tail(samples, fit, path) -> None:
    """Empirical survival function with the fitted tail slope."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    surv = 1.0 - np.arange(1, n + 1) / n
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(x[:-1], surv[:-1], ".", ms=2, color="steelblue", label="data")
    frac = fit.n / n
    grid = np.geomspace(fit.x_min, x[-1], 50)
    ax.loglog(grid, frac * (grid / fit.x_min) ** (-(fit.xi - 1.0)), "r-", lw=1.2,
              label=f"slope {-(fit.xi - 1.0):.2f}")
    ax.set_xlabel("x")
    ax.set_ylabel("P(X > x)")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def fig_hurst(signs, h: float, path, low_freq_fraction: float = 0.10) -> None:
    """Sign-series periodogram with the fitted low-frequency slope."""
    x = np.asarray(signs, dtype=np.float64)
    power = np.abs(np.fft.rfft(x - x.mean())) ** 2 / x.size
    freq = np.fft.rfftfreq(x.size)
    freq, power = freq[1:], power[1:]
    m = max(int(low_freq_fraction * freq.size), 2)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(freq, power, ",", color="0.75")
    ax.loglog(freq[:m], power[:m], ".", ms=2, color="steelblue", label="fit range")
    slope = 1.0 - 2.0 * h
    anchor = np.exp(np.mean(np.log(power[:m])) - slope * np.mean(np.log(freq[:m])))
    ax.loglog(freq[:m], anchor * freq[:m] ** slope, "r-", lw=1.2, label=f"H = {h:.3f}")
    ax.set_xlabel("frequency")
    ax.set_ylabel("power")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def fig_impact_fn(fit, path) -> None:
    """Binned directed returns against volume with the fitted power law."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    used = fit.used
    ax.loglog(fit.bin_centers[~used], np.abs(fit.bin_means[~used]), "x", color="0.7", label="excluded")
    ax.loglog(fit.bin_centers[used], fit.bin_means[used], "o", ms=4, color="steelblue", label="bins")
    grid = np.geomspace(fit.bin_centers[used].min(), fit.bin_centers[used].max(), 50)
    ax.loglog(grid, fit.fn(grid), "r-", lw=1.2, label=f"f(v) = {fit.fn.f1:.3g} v^{fit.fn.f2:.3f}")
    ax.set_xlabel("volume")
    ax.set_ylabel("mean directed return")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def fig_sizes(sizes, path) -> None:
    """Survival function of hidden-order piece counts."""
    x = np.sort(np.asarray(sizes, dtype=np.float64))
    surv = 1.0 - np.arange(1, x.size + 1) / x.size
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(x[:-1], surv[:-1], ".", ms=3, color="steelblue")
    ax.set_xlabel("order size N")
    ax.set_ylabel("P(size > N)")
    fig.tight_layout()
    _save(fig, path)


def fig_order_curve(curve, path) -> None:
    """Scaled hidden-order impact against size with the matching law."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(curve.sizes, curve.mean_scaled_return, yerr=curve.stderr,
                fmt="o", ms=4, lw=1, color="steelblue", label="measured")
    ax.plot(curve.sizes, curve.theory, "r-", lw=1.2,
            label="ln(1+N)" if curve.mode == "E2" else "N^(1-phi)")
    ax.set_xscale("log")
    ax.set_xlabel("order size N")
    ax.set_ylabel("scaled return")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def fig_imbalance(ratios, path) -> None:
    """The three imbalance ratios by lag."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    k = ratios.lags[1:]
    ax.plot(k, ratios.transaction[1:], lw=1, label="p+/p-")
    ax.plot(k, ratios.ret[1:], lw=1, label="r-/r+")
    ax.plot(k, ratios.liquidity[1:], lw=1, label="l-/l+")
    ax.axhline(1.0, color="grey", ls="--", lw=1)
    ax.set_xlabel("lag k")
    ax.set_ylabel("imbalance ratio")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def fig_cum_impact(curve, path) -> None:
    """Cumulative response curves."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(curve.horizons, curve.i, lw=1.2, label="I")
    ax.plot(curve.horizons, curve.i_n, lw=1.2, label="I_N")
    ax.plot(curve.horizons, curve.i_l, lw=1.2, label="I_L")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("cumulative response")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def fig_response(rc, path) -> None:
    """Conditional returns and their ratio against the sign predictor."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.errorbar(rc.eps_hat_center, rc.r_plus, yerr=rc.r_plus_se, fmt="o", ms=3, lw=1,
                 color="seagreen", label="r+")
    ax1.errorbar(rc.eps_hat_center, rc.r_minus, yerr=rc.r_minus_se, fmt="s", ms=3, lw=1,
                 color="firebrick", label="r-")
    ax1.set_xlabel("predicted sign")
    ax1.set_ylabel("conditional mean return")
    ax1.legend(frameon=False)
    ax2.plot(rc.eps_hat_center, rc.ratio, "o", ms=4, color="steelblue", label="r+/r-")
    ok = np.isfinite(rc.theory)
    ax2.plot(rc.eps_hat_center[ok], rc.theory[ok], "r-", lw=1.2, label="(1-e)/(1+e)")
    ax2.set_xlabel("predicted sign")
    ax2.set_ylabel("ratio")
    ax2.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def fig_decay(profile, path) -> None:
    """Cumulative impact around hidden-order completion."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(profile.pre_k, profile.pre_mean, yerr=profile.pre_se, fmt="o-", ms=3,
                lw=1, color="steelblue", label="before completion")
    ax.errorbar(profile.post_k, profile.post_mean, yerr=profile.post_se, fmt="-", lw=1,
                color="firebrick", label="after completion")
    ax.axvline(0, color="grey", ls="--", lw=1)
    ax.set_xlabel("transactions from completion")
    ax.set_ylabel("mean cumulative impact")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def fig_stylized(acf_lags, acf_values, band, abs_lags, abs_values, decay_fit, path) -> None:
    """Return ACF against the noise band, and the volatility-clustering decay."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(acf_lags[1:], acf_values[1:], lw=0.8, color="steelblue")
    ax1.axhline(band, color="grey", ls="--", lw=1)
    ax1.axhline(-band, color="grey", ls="--", lw=1)
    ax1.set_xlabel("lag")
    ax1.set_ylabel("return ACF")
    v = np.asarray(abs_values)[1:]
    k = np.asarray(abs_lags)[1:]
    ax2.loglog(k, np.abs(v), lw=0.8, color="steelblue", label="|r| ACF")
    grid = np.geomspace(decay_fit.lag_min, decay_fit.lag_max, 50)
    ax2.loglog(grid, decay_fit.amplitude * grid ** (-decay_fit.exponent), "r-", lw=1.2,
               label=f"slope {-decay_fit.exponent:.2f}")
    ax2.set_xlabel("lag")
    ax2.set_ylabel("|r| autocorrelation")
    ax2.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)
