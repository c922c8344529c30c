"""Tests for period estimation and the nine synthetic anomaly injectors."""

import numpy as np
import pytest

from ranksel.data import TimeSeries
from ranksel.injection import (
    INJECTION_KINDS,
    InjectionSpec,
    estimate_period,
    inject,
)


def sine_series(T=500, period=50, d=1, noise=0.0, train_end=None, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    base = np.sin(2 * np.pi * t / period)
    values = np.column_stack([base + noise * rng.normal(size=T) for _ in range(d)])
    return TimeSeries(id="sine", values=values, train_end=train_end)


def acf_oracle(values, lag):
    """Mean-centered autocorrelation at one lag, averaged over dimensions."""
    centered = values - values.mean(axis=0)
    denom = (centered**2).sum(axis=0)
    num = (centered[:-lag] * centered[lag:]).sum(axis=0)
    return float((num / denom).mean())


class TestEstimatePeriod:
    def test_sine_period_recovered(self):
        series = sine_series(T=500, period=50)
        assert abs(estimate_period(series) - 50) <= 1

    def test_matches_acf_peak_oracle(self):
        series = sine_series(T=300, period=30, noise=0.1, seed=1)
        estimated = estimate_period(series)
        acf = {lag: acf_oracle(series.values, lag) for lag in range(1, 151)}
        peaks = [
            lag
            for lag in range(2, 151)
            if acf[lag] > acf[lag - 1] and (lag == 150 or acf[lag] >= acf[lag + 1])
        ]
        oracle = max(peaks, key=lambda lag: acf[lag])
        assert estimated == oracle
        assert abs(estimated - 30) <= 1

    def test_white_noise_falls_back_to_one(self):
        rng = np.random.default_rng(2)
        series = TimeSeries(id="wn", values=rng.normal(size=500))
        assert estimate_period(series) == 1

    def test_constant_series_falls_back(self):
        series = TimeSeries(id="c", values=np.full(100, 2.0))
        assert estimate_period(series) == 1

    def test_too_short(self):
        with pytest.raises(ValueError):
            estimate_period(TimeSeries(id="s", values=[1.0, 2.0, 3.0]))


class TestInjectContracts:
    @pytest.mark.parametrize("kind", INJECTION_KINDS)
    def test_off_span_bit_identity_labels_and_determinism(self, kind):
        series = sine_series(T=240, period=24, d=2, noise=0.05, train_end=60, seed=3)
        spec = InjectionSpec(kind=kind)
        for seed in range(100):
            out = inject(series, spec, seed=seed)
            again = inject(series, spec, seed=seed)
            np.testing.assert_array_equal(out.values, again.values)
            np.testing.assert_array_equal(out.pseudo_labels, again.pseudo_labels)
            assert out.anomaly_span == again.anomaly_span

            start, end = out.anomaly_span
            assert series.test_start <= start < end
            assert out.pseudo_labels.sum() >= 1
            # labels live inside the span and nowhere else
            marked = np.flatnonzero(out.pseudo_labels)
            assert marked.min() >= start and marked.max() < end
            if kind != "spike":
                np.testing.assert_array_equal(marked, np.arange(start, end))

            if kind == "speedup":
                np.testing.assert_array_equal(out.values[:start], series.values[:start])
                np.testing.assert_array_equal(
                    out.values[end:], series.values[start + _orig_len(series, out) :]
                )
            else:
                assert out.values.shape == series.values.shape
                mask = np.ones(series.length, dtype=bool)
                mask[start:end] = False
                np.testing.assert_array_equal(out.values[mask], series.values[mask])

    def test_spike_labels_only_spiked_points(self):
        series = sine_series(T=300, period=30, train_end=50, seed=4)
        spec = InjectionSpec(kind="spike", max_length=40, p=0.3)
        out = inject(series, spec, seed=11)
        start, end = out.anomaly_span
        changed = np.flatnonzero((out.values != series.values).any(axis=1))
        np.testing.assert_array_equal(changed, np.flatnonzero(out.pseudo_labels))
        assert changed.min() >= start and changed.max() < end


def _orig_len(series, injected):
    return series.length - injected.values.shape[0] + (
        injected.anomaly_span[1] - injected.anomaly_span[0]
    )


class TestInjectKinds:
    def setup_method(self):
        self.series = sine_series(T=400, period=40, train_end=100, noise=0.02, seed=5)

    def test_scale_factor_one_is_identity(self):
        spec = InjectionSpec(kind="scale", scale_factor=1.0, max_length=30)
        out = inject(self.series, spec, seed=0)
        np.testing.assert_array_equal(out.values, self.series.values)
        assert out.pseudo_labels.sum() >= 1

    def test_scale_multiplies_span(self):
        spec = InjectionSpec(kind="scale", scale_factor=3.0, max_length=30)
        out = inject(self.series, spec, seed=1)
        start, end = out.anomaly_span
        np.testing.assert_allclose(out.values[start:end], 3.0 * self.series.values[start:end])

    def test_flip_on_constant_span_is_identity(self):
        series = TimeSeries(id="c", values=np.full(120, 1.5), train_end=20)
        out = inject(series, InjectionSpec(kind="flip", max_length=20), seed=2)
        np.testing.assert_array_equal(out.values, series.values)

    def test_flip_reverses_and_is_involution(self):
        spec = InjectionSpec(kind="flip", max_length=25)
        out = inject(self.series, spec, seed=3)
        start, end = out.anomaly_span
        np.testing.assert_array_equal(
            out.values[start:end], self.series.values[start:end][::-1]
        )
        restored = out.values.copy()
        restored[start:end] = restored[start:end][::-1]
        np.testing.assert_array_equal(restored, self.series.values)

    def test_noise_statistics(self):
        # sample std of (out - in) on the span approximates sigma within 15%
        series = sine_series(T=4000, period=100, train_end=200, seed=6)
        spec = InjectionSpec(kind="noise", sigma=1.0, max_length=150)
        deltas = []
        for seed in range(40):
            out = inject(series, spec, seed=seed)
            start, end = out.anomaly_span
            deltas.append((out.values - series.values)[start:end].ravel())
        sample_std = np.concatenate(deltas).std()
        assert abs(sample_std - 1.0) < 0.15

    def test_speedup_double_frequency_shortens(self):
        spec = InjectionSpec(kind="speedup", factor=2.0, max_length=60)
        for seed in range(30):
            out = inject(self.series, spec, seed=seed)
            start, end = out.anomaly_span
            original_length = _orig_len(self.series, out)
            assert end - start == max(1, round(original_length / 2))
            assert out.values.shape[0] == self.series.length - original_length + (end - start)
            assert out.pseudo_labels.shape[0] == out.values.shape[0]

    def test_speedup_half_frequency_lengthens(self):
        spec = InjectionSpec(kind="speedup", factor=0.5, max_length=40)
        out = inject(self.series, spec, seed=7)
        assert out.values.shape[0] > self.series.length

    def test_cutoff_replaces_span_near_level(self):
        spec = InjectionSpec(kind="cutoff", level=0.0, sigma=0.01, max_length=50)
        out = inject(self.series, spec, seed=8)
        start, end = out.anomaly_span
        mean = self.series.values.mean(axis=0)
        std = self.series.values.std(axis=0)
        z = (out.values[start:end] - mean) / std
        assert np.abs(z).max() < 0.1

    def test_wander_adds_linear_trend(self):
        spec = InjectionSpec(kind="wander", baseline=4.0, max_length=30)
        out = inject(self.series, spec, seed=9)
        start, end = out.anomaly_span
        trend = (out.values - self.series.values)[start:end, 0]
        expected = np.linspace(0.0, 4.0, end - start)
        np.testing.assert_allclose(trend, expected, atol=1e-12)

    def test_contextual_is_affine_on_span(self):
        spec = InjectionSpec(kind="contextual", max_length=30)
        out = inject(self.series, spec, seed=10)
        start, end = out.anomaly_span
        x = self.series.values[start:end, 0]
        y = out.values[start:end, 0]
        if end - start >= 3:
            coeffs = np.polyfit(x, y, 1)
            np.testing.assert_allclose(np.polyval(coeffs, x), y, atol=1e-8)

    def test_average_smooths_span(self):
        spec = InjectionSpec(kind="average", len_window=5, max_length=40)
        series = sine_series(T=400, period=20, train_end=100, noise=0.3, seed=11)
        out = inject(series, spec, seed=12)
        start, end = out.anomaly_span
        if end - start >= 10:
            orig_var = np.diff(series.values[start:end, 0]).var()
            new_var = np.diff(out.values[start:end, 0]).var()
            assert new_var < orig_var

    def test_average_window_mean_formula(self):
        spec = InjectionSpec(kind="average", len_window=3, max_length=20)
        out = inject(self.series, spec, seed=13)
        start, end = out.anomaly_span
        span = self.series.values[start:end]
        for t in range(end - start):
            lo = max(0, t - 2)
            np.testing.assert_allclose(out.values[start + t], span[lo : t + 1].mean(axis=0))

    def test_multivariate_same_span_all_dims(self):
        series = sine_series(T=300, period=30, d=3, train_end=60, noise=0.05, seed=14)
        out = inject(series, InjectionSpec(kind="scale", max_length=25), seed=15)
        start, end = out.anomaly_span
        changed = (out.values != series.values).any(axis=0)
        assert changed.all()

    def test_max_length_must_fit_test_segment(self):
        series = sine_series(T=100, period=10, train_end=90)
        with pytest.raises(ValueError, match="test segment"):
            inject(series, InjectionSpec(kind="noise", max_length=10), seed=0)

    def test_speedup_factor_validated(self):
        with pytest.raises(ValueError, match="factor"):
            InjectionSpec(kind="speedup", factor=3.0)
