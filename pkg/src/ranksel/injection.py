"""Synthetic anomaly injection with periodicity-guided placement.

Each injection copies a series, transforms one contiguous span of its test
segment with one of nine anomaly kinds, and emits pseudo-labels marking the
span. Span starts snap to cycle beginnings estimated from the
autocorrelation function; spikes are point outliers and may start anywhere
in the test segment.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .data import TimeSeries

INJECTION_KINDS = (
    "spike",
    "flip",
    "speedup",
    "noise",
    "cutoff",
    "average",
    "scale",
    "wander",
    "contextual",
)

SPEEDUP_FACTORS = (0.5, 2.0)


@dataclass(frozen=True)
class InjectionSpec:
    """Anomaly kind plus its parameters; ``None`` fields take defaults
    scaled to the target series' statistics at injection time.

    Defaults: ``max_length`` = twice the estimated period (capped at
    T/10); spike ``p`` = 0.2 and ``sigma`` = 3 std; noise ``sigma`` =
    0.5 std; cutoff ``sigma`` = 0.1 on the standardized scale; scale
    factor 3; wander baseline = 2 std; contextual ``sigma_a`` = 0.5 and
    ``sigma_b`` = 0.5 std; average window = period / 4 (at least 2).
    """

    kind: str
    max_length: int | None = None
    p: float = 0.2
    sigma: float | None = None
    factor: float = 2.0
    level: float = 0.0
    len_window: int | None = None
    scale_factor: float = 3.0
    baseline: float | None = None
    sigma_a: float = 0.5
    sigma_b: float | None = None

    def __post_init__(self):
        if self.kind not in INJECTION_KINDS:
            raise ValueError(f"unknown injection kind {self.kind!r}")
        if self.max_length is not None and self.max_length < 1:
            raise ValueError(f"max_length must be >= 1, got {self.max_length}")
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.kind == "speedup" and self.factor not in SPEEDUP_FACTORS:
            raise ValueError(
                f"speedup factor must be one of {SPEEDUP_FACTORS}, got {self.factor}"
            )
        if self.kind == "cutoff" and self.level not in (0.0, 1.0):
            raise ValueError(f"cutoff level must be 0 or 1, got {self.level}")
        if self.len_window is not None and self.len_window < 1:
            raise ValueError(f"len_window must be >= 1, got {self.len_window}")
        if self.sigma_a < 0 or (self.sigma_b is not None and self.sigma_b < 0):
            raise ValueError("contextual sigmas must be >= 0")


@dataclass(frozen=True)
class InjectedSeries:
    """A series copy carrying one synthetic anomaly and its pseudo-labels."""

    values: np.ndarray
    pseudo_labels: np.ndarray
    anomaly_span: tuple
    kind: str
    source_id: str = ""
    train_end: int | None = None

    def to_series(self, series_id=None):
        """View the injected copy as a labeled TimeSeries."""
        return TimeSeries(
            id=series_id or self.source_id,
            values=self.values,
            labels=self.pseudo_labels,
            train_end=self.train_end,
        )


def estimate_period(series):
    """Dominant cycle length from the mean-centered autocorrelation.

    Returns the lag in [2, T/2] at the highest local peak of the
    per-dimension-averaged ACF. A smooth signal's ACF is always large at
    tiny lags, so peaks (not the raw argmax) carry the periodicity. A
    peak must clear a Bonferroni-corrected white-noise significance band
    or the series is treated as aperiodic and 1 is returned; constant
    series land there too.
    """
    T = series.length
    if T < 4:
        raise ValueError(f"need at least 4 points to estimate a period, got {T}")
    centered = series.values - series.values.mean(axis=0)
    denom = (centered**2).sum(axis=0)
    active = denom > 0
    if not active.any():
        return 1
    # lagged products for all lags at once via FFT autocorrelation
    size = 1 << (2 * T - 1).bit_length()
    spectrum = np.fft.rfft(centered[:, active], n=size, axis=0)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), n=size, axis=0)[: T // 2 + 1]
    acf = (acov / denom[active]).mean(axis=1)  # index = lag, 0..T//2

    max_lag = T // 2
    lags = np.arange(2, max_lag + 1)
    rising = acf[lags] > acf[lags - 1]
    falling = acf[lags] >= np.append(acf[lags[:-1] + 1], -np.inf)
    peaks = lags[rising & falling]
    if peaks.size == 0:
        return 1
    band = stats.norm.ppf(1.0 - 0.025 / lags.size) / np.sqrt(T)
    best = peaks[int(np.argmax(acf[peaks]))]
    if acf[best] <= band:
        return 1
    return int(best)


def _per_dim_std(values):
    return values.std(axis=0)


def _resolve_max_length(spec, series, period):
    test_length = series.test_length
    if spec.max_length is not None:
        if spec.max_length >= test_length:
            raise ValueError(
                f"max_length={spec.max_length} must be smaller than the "
                f"test segment ({test_length} points)"
            )
        return spec.max_length
    default = min(2 * period, max(series.length // 10, 1))
    return max(1, min(default, test_length - 1))


def _choose_span(series, kind, length, period, rng):
    # spikes are point outliers and may start anywhere in the test segment;
    # everything else starts at the beginning of a cycle
    last_start = series.length - length
    if kind == "spike" or period <= 1:
        return int(rng.integers(series.test_start, last_start + 1))
    starts = np.arange(series.test_start, last_start + 1, period)
    return int(starts[rng.integers(starts.shape[0])])


def inject(series, spec, seed=0, period=None):
    """Copy a series, transform one span of its test segment, emit pseudo-labels.

    The span length is uniform on {1..max_length} and the start is a
    uniformly chosen cycle start (see :func:`estimate_period`; pass
    ``period`` to reuse a precomputed estimate). Off-span values are
    bit-identical to the input; the speedup kind changes the series
    length, shifting everything after the span. Deterministic in
    (series, spec, seed).
    """
    rng = np.random.default_rng(seed)
    if period is None:
        period = estimate_period(series)
    max_length = _resolve_max_length(spec, series, period)
    length = int(rng.integers(1, max_length + 1))
    start = _choose_span(series, spec.kind, length, period, rng)
    end = start + length

    values = series.values.copy()
    span = values[start:end]
    d = series.dim
    std = _per_dim_std(series.values)

    if spec.kind == "spike":
        sigma = spec.sigma if spec.sigma is not None else 3.0 * std
        mask = rng.random(length) < spec.p
        while not mask.any():
            mask = rng.random(length) < spec.p
        spikes = rng.normal(0.0, 1.0, size=(length, d)) * sigma
        span[mask] += spikes[mask]
        labels = np.zeros(series.length, dtype=np.int8)
        labels[start:end][mask] = 1
        return InjectedSeries(
            values=values,
            pseudo_labels=labels,
            anomaly_span=(start, end),
            kind=spec.kind,
            source_id=series.id,
            train_end=series.train_end,
        )

    if spec.kind == "flip":
        values[start:end] = span[::-1].copy()
    elif spec.kind == "speedup":
        new_length = max(1, int(round(length / spec.factor)))
        positions = np.linspace(0, length - 1, new_length)
        resampled = np.column_stack(
            [np.interp(positions, np.arange(length), span[:, j]) for j in range(d)]
        )
        values = np.vstack([values[:start], resampled, values[end:]])
        end = start + new_length
    elif spec.kind == "noise":
        sigma = spec.sigma if spec.sigma is not None else 0.5 * std
        values[start:end] = span + rng.normal(0.0, 1.0, size=(length, d)) * sigma
    elif spec.kind == "cutoff":
        # levels live on the per-dimension standardized scale
        sigma = spec.sigma if spec.sigma is not None else 0.1
        mean = series.values.mean(axis=0)
        z = rng.normal(spec.level, sigma, size=(length, d))
        values[start:end] = mean + std * z
    elif spec.kind == "average":
        window = spec.len_window if spec.len_window is not None else max(2, period // 4)
        smoothed = np.empty_like(span)
        for t in range(length):
            lo = max(0, t - window + 1)
            smoothed[t] = span[lo : t + 1].mean(axis=0)
        values[start:end] = smoothed
    elif spec.kind == "scale":
        values[start:end] = span * spec.scale_factor
    elif spec.kind == "wander":
        baseline = spec.baseline if spec.baseline is not None else 2.0 * std
        trend = np.linspace(0.0, 1.0, length)[:, None] * baseline
        values[start:end] = span + trend
    elif spec.kind == "contextual":
        sigma_b = spec.sigma_b if spec.sigma_b is not None else 0.5 * std
        a = rng.normal(1.0, spec.sigma_a)
        b = rng.normal(0.0, 1.0, size=d) * sigma_b
        values[start:end] = a * span + b

    labels = np.zeros(values.shape[0], dtype=np.int8)
    labels[start:end] = 1
    return InjectedSeries(
        values=values,
        pseudo_labels=labels,
        anomaly_span=(start, end),
        kind=spec.kind,
        source_id=series.id,
        train_end=series.train_end,
    )
