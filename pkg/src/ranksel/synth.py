"""Synthetic benchmark generation: periodic series with planted anomalies.

The planted anomaly reuses the injection machinery, so its pseudo-labels
become the series' ground-truth labels. This gives a fully labeled,
deterministic benchmark for exercising the selection pipeline end to end.
"""

import numpy as np

from .data import Dataset, TimeSeries, derive_seed
from .injection import InjectionSpec, inject


def make_series(series_id, length=400, dim=1, train_fraction=0.5, seed=0):
    """One clean periodic series: noisy sine with randomized shape."""
    rng = np.random.default_rng(seed)
    period = int(rng.choice([20, 25, 32, 40, 50]))
    t = np.arange(length)
    columns = []
    for _ in range(dim):
        amplitude = rng.uniform(0.8, 1.5)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        noise = rng.uniform(0.05, 0.2)
        columns.append(
            amplitude * np.sin(2.0 * np.pi * t / period + phase)
            + noise * rng.normal(size=length)
        )
    return TimeSeries(
        id=series_id,
        values=np.column_stack(columns),
        train_end=int(length * train_fraction),
    )


def make_benchmark(
    n_series=20,
    kinds=("noise", "scale", "cutoff"),
    length=400,
    dim=1,
    train_fraction=0.5,
    seed=0,
    name="synthetic",
):
    """A labeled benchmark of ``n_series`` series, one planted anomaly each.

    Anomaly kinds rotate through ``kinds``; the planted span's
    pseudo-labels serve as ground truth. Fully deterministic in ``seed``.
    """
    series = []
    for i in range(n_series):
        clean = make_series(
            f"series-{i:03d}",
            length=length,
            dim=dim,
            train_fraction=train_fraction,
            seed=derive_seed(seed, "series", i),
        )
        kind = kinds[i % len(kinds)]
        planted = inject(
            clean, InjectionSpec(kind=kind), seed=derive_seed(seed, "plant", i)
        )
        series.append(planted.to_series())
    return Dataset(name=name, series=tuple(series))
