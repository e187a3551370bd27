"""Autocorrelation, decay fits, tail and Hurst estimation."""

import numpy as np
import pytest

from impactflow import estimators
from impactflow.errors import (
    HOutOfRange,
    InsufficientPositivePoints,
    LagTooLarge,
    SeriesTooShort,
    TooFewTailSamples,
    ZeroLogSum,
    ZeroVariance,
)


def direct_acf(x, max_lag):
    """O(n * k) reference: biased autocovariance over the mean-subtracted series."""
    x = np.asarray(x, dtype=np.float64)
    xc = x - x.mean()
    c0 = np.dot(xc, xc)
    out = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        out[k] = np.dot(xc[: x.size - k], xc[k:]) / c0
    return out


class TestAcf:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=2000)
        est = estimators.acf(x, 50)
        np.testing.assert_allclose(est.values, direct_acf(x, 50), rtol=0, atol=1e-12)

    def test_lag_zero_is_one(self):
        est = estimators.acf(np.random.default_rng(0).normal(size=100), 10)
        assert est.values[0] == 1.0
        np.testing.assert_array_equal(est.lags, np.arange(11))
        assert est.series_length == 100

    def test_iid_signs_within_band(self):
        rng = np.random.default_rng(11)
        x = rng.choice([-1.0, 1.0], size=10**6)
        est = estimators.acf(x, 50)
        assert np.max(np.abs(est.values[1:])) < 4.0 / np.sqrt(x.size)

    def test_ar1_recovery(self):
        from scipy.signal import lfilter

        rng = np.random.default_rng(5)
        x = lfilter([1.0], [1.0, -0.5], rng.normal(size=10**6))
        est = estimators.acf(x, 10)
        np.testing.assert_allclose(est.values[1:6], 0.5 ** np.arange(1, 6), atol=0.02)

    def test_constant_series(self):
        with pytest.raises(ZeroVariance):
            estimators.acf(np.ones(100), 5)

    def test_lag_too_large(self):
        with pytest.raises(LagTooLarge):
            estimators.acf(np.random.default_rng(0).normal(size=20), 19)

    def test_values_bounded(self):
        rng = np.random.default_rng(9)
        x = np.repeat(rng.normal(size=100), 7)
        est = estimators.acf(x, 60)
        assert np.all(np.abs(est.values) <= 1.0 + 1e-12)


class TestWhiteNoiseBand:
    def test_formula(self):
        assert estimators.white_noise_band(10000) == pytest.approx(0.0196, abs=1e-10)
        assert estimators.white_noise_band(100, z=3.0) == pytest.approx(0.3)


class TestFitPowerLawDecay:
    def test_exact_power_law(self):
        lags = np.arange(0, 1001)
        values = np.ones(1001)
        values[1:] = 0.9 * lags[1:].astype(float) ** -0.67
        est = estimators.AcfEstimate(lags=lags, values=values, series_length=10**6)
        fit = estimators.fit_power_law_decay(est, 10, 1000)
        assert fit.exponent == pytest.approx(0.67, abs=1e-9)
        assert fit.amplitude == pytest.approx(0.9, rel=1e-9)
        assert fit.points_used == 991

    def test_negative_values_dropped(self):
        lags = np.arange(0, 101)
        values = 0.5 * np.maximum(lags, 1).astype(float) ** -0.5
        values[40:] = -0.01
        est = estimators.AcfEstimate(lags=lags, values=values, series_length=1000)
        fit = estimators.fit_power_law_decay(est, 10, 100)
        assert fit.points_used == 30
        assert fit.exponent == pytest.approx(0.5, abs=1e-9)

    def test_insufficient_positive_points(self):
        lags = np.arange(0, 101)
        values = np.full(101, -0.01)
        values[0] = 1.0
        est = estimators.AcfEstimate(lags=lags, values=values, series_length=1000)
        with pytest.raises(InsufficientPositivePoints):
            estimators.fit_power_law_decay(est, 10, 100)


class TestHillTail:
    def test_hand_value(self):
        # xi = 1 + 3 / (ln 2 + ln 4) with the threshold pinned at 1
        fit = estimators.hill_tail(np.array([1.0, 2.0, 4.0]), x_min=1.0)
        assert fit.xi == pytest.approx(1.0 + 3.0 / np.log(8.0), rel=1e-12)
        assert fit.n == 3

    def test_pareto_recovery(self):
        # density exponent xi: draws with survival (1+x)^-(xi-1)
        rng = np.random.default_rng(2)
        draws = rng.pareto(2.0, 10**6) + 1.0
        fit = estimators.hill_tail(draws, fraction=0.01)
        assert fit.xi == pytest.approx(3.0, abs=0.15)
        assert fit.n == pytest.approx(10**4, rel=0.01)

    def test_threshold_doubling_stability(self):
        """Doubling the tail fraction moves a clean Pareto estimate only a little."""
        devs = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            draws = rng.pareto(1.5, 10**5) + 1.0
            a = estimators.hill_tail(draws, fraction=0.01).xi
            b = estimators.hill_tail(draws, fraction=0.02).xi
            devs.append(abs(a - b))
        assert np.median(devs) < 0.2

    def test_all_at_x_min(self):
        with pytest.raises(ZeroLogSum):
            estimators.hill_tail(np.full(100, 3.0), x_min=3.0)

    def test_too_few_tail_samples(self):
        with pytest.raises(TooFewTailSamples):
            estimators.hill_tail(np.array([1.0, 2.0]), x_min=5.0)

    def test_default_fraction_floor(self):
        # 200 samples at the default fraction keep < 10 in the tail
        with pytest.raises(TooFewTailSamples):
            estimators.hill_tail(np.linspace(1, 2, 200))

    def test_rejects_nonpositive(self):
        with pytest.raises(Exception):
            estimators.hill_tail(np.array([1.0, -2.0, 3.0]))


class TestHurstPeriodogram:
    def test_iid_is_half(self):
        rng = np.random.default_rng(4)
        x = rng.choice([-1.0, 1.0], size=2**18)
        assert estimators.hurst_periodogram(x) == pytest.approx(0.5, abs=0.03)

    def test_series_too_short(self):
        with pytest.raises(SeriesTooShort):
            estimators.hurst_periodogram(np.ones(2**14 - 1))

    def test_clipped_to_open_interval(self):
        rng = np.random.default_rng(8)
        # strongly antipersistent: differenced noise pushes H toward 0
        x = np.diff(rng.normal(size=2**14 + 1))
        h = estimators.hurst_periodogram(x)
        assert 0.01 <= h <= 0.99


class TestDeriveExponents:
    def test_reference_rows(self):
        ex = estimators.derive_exponents(0.68)
        assert ex.alpha == pytest.approx(1.64, abs=1e-12)
        assert ex.phi == pytest.approx(0.18, abs=1e-12)
        assert ex.gamma == pytest.approx(0.64, abs=1e-12)
        ex = estimators.derive_exponents(0.73)
        assert ex.alpha == pytest.approx(1.54, abs=1e-12)
        assert ex.phi == pytest.approx(0.23, abs=1e-12)

    def test_relations_consistent(self):
        for h in (0.51, 0.6, 0.75, 0.99):
            ex = estimators.derive_exponents(h)
            assert ex.gamma == pytest.approx(ex.alpha - 1.0, abs=1e-12)
            assert ex.alpha == pytest.approx(3.0 - 2.0 * h, abs=1e-12)
            assert ex.phi == pytest.approx(h - 0.5, abs=1e-12)

    @pytest.mark.parametrize("h", [0.5, 1.0, 0.3, 1.2])
    def test_h_out_of_range(self, h):
        with pytest.raises(HOutOfRange):
            estimators.derive_exponents(h)
