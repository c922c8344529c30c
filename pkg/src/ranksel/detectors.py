"""Built-in anomaly detectors and ingestion of external model scores.

Two simple detectors make the pipeline runnable end to end: a moving-average
forecaster and a k-NN distance model, both exposed as sklearn-style
estimators over raw (T, d) arrays. ``score_series`` adapts them to
:class:`~ranksel.data.TimeSeries` train/test boundaries, and
``ingest_external`` reads score files produced by models trained elsewhere.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from .data import LoadError, ModelOutput
from .validation import as_float_matrix

DETECTOR_KINDS = ("moving_average", "knn", "external")


@dataclass(frozen=True)
class DetectorConfig:
    """A fully specified candidate model: detector kind plus hyper-parameters."""

    kind: str
    model_id: str
    window: int = 16
    k: int = 1

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.kind == "knn" and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def default_roster():
    """The built-in candidate pool: 4 moving-average and 3 k-NN configs."""
    roster = [
        DetectorConfig(kind="moving_average", model_id=f"ma-w{w}", window=w)
        for w in (4, 8, 16, 32)
    ]
    roster += [
        DetectorConfig(kind="knn", model_id=f"knn-k{k}-w16", window=16, k=k)
        for k in (1, 5, 10)
    ]
    return roster


class MovingAverageDetector(BaseEstimator):
    """Scores each point by its squared distance to the trailing mean.

    The forecast for time t is the mean of the ``window`` observations
    preceding t; near the start of the test segment the tail of the
    train segment supplies context, and points with fewer predecessors
    use all of them. A point with no predecessor at all scores 0 and
    forecasts itself.
    """

    def __init__(self, window=16):
        self.window = window

    def fit(self, X=None, y=None):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if X is None or np.asarray(X).size == 0:
            self.context_ = None
        else:
            context = as_float_matrix(X)
            self.context_ = context[-self.window :]
        return self

    def _forecasts(self, X):
        X = as_float_matrix(X)
        context = getattr(self, "context_", None)
        if context is not None and context.shape[1] != X.shape[1]:
            raise ValueError(
                f"dimension mismatch: fitted d={context.shape[1]}, got {X.shape[1]}"
            )
        full = X if context is None else np.vstack([context, X])
        offset = 0 if context is None else context.shape[0]

        cumsum = np.vstack([np.zeros(full.shape[1]), np.cumsum(full, axis=0)])
        positions = np.arange(offset, offset + X.shape[0])
        lows = np.maximum(positions - self.window, 0)
        counts = (positions - lows).astype(float)
        sums = cumsum[positions] - cumsum[lows]
        with np.errstate(invalid="ignore"):
            forecasts = sums / counts[:, None]
        empty = counts == 0
        forecasts[empty] = X[empty]
        return X, forecasts

    def predict(self, X):
        """Trailing-mean forecast for every row of X."""
        _, forecasts = self._forecasts(X)
        return forecasts

    def score_samples(self, X):
        """Squared L2 residual between each row and its forecast."""
        X, forecasts = self._forecasts(X)
        return ((X - forecasts) ** 2).sum(axis=1)


class KnnDetector(BaseEstimator):
    """Scores sliding windows by their mean squared distance to the k
    nearest windows of the train segment.

    Train windows are taken at every offset and flattened to
    ``window * d`` vectors. The per-point score is the score of the
    window ending at that point; the first ``window - 1`` test points
    inherit the first computable window's score.
    """

    def __init__(self, window=16, k=1):
        self.window = window
        self.k = k

    @staticmethod
    def _windows(X, window):
        count = X.shape[0] - window + 1
        if count < 1:
            return np.empty((0, window * X.shape[1]))
        idx = np.arange(window)[None, :] + np.arange(count)[:, None]
        return X[idx].reshape(count, -1)

    def fit(self, X, y=None):
        if self.window < 1 or self.k < 1:
            raise ValueError("window and k must be >= 1")
        X = as_float_matrix(X, name="train values")
        windows = self._windows(X, self.window)
        if windows.shape[0] < self.k:
            required = self.window + self.k - 1
            raise ValueError(
                f"train segment has {windows.shape[0]} windows of length "
                f"{self.window}; k={self.k} requires at least {self.k} "
                f"(train length >= {required})"
            )
        self.train_windows_ = windows
        return self

    def score_samples(self, X):
        X = as_float_matrix(X)
        if X.shape[0] < self.window:
            raise ValueError(
                f"test segment length {X.shape[0]} is shorter than window "
                f"{self.window}"
            )
        windows = self._windows(X, self.window)
        distances = cdist(windows, self.train_windows_, "sqeuclidean")
        k = min(self.k, distances.shape[1])
        window_scores = np.partition(distances, k - 1, axis=1)[:, :k].mean(axis=1)
        scores = np.empty(X.shape[0])
        scores[: self.window - 1] = window_scores[0]
        scores[self.window - 1 :] = window_scores
        return scores


def build_detector(config):
    if config.kind == "moving_average":
        return MovingAverageDetector(window=config.window)
    if config.kind == "knn":
        return KnnDetector(window=config.window, k=config.k)
    raise ValueError(
        f"{config.kind!r} models are not built locally; ingest their score files"
    )


def fit_detector(config, series):
    """Fit a built-in detector on a series' train segment."""
    detector = build_detector(config)
    if config.kind == "moving_average":
        train = series.train_values if series.test_start else None
        return detector.fit(train)
    return detector.fit(series.train_values)


def score_series(config, series, detector=None):
    """Score a series' test segment with a built-in detector.

    Returns a :class:`ModelOutput`; the moving-average detector also
    emits its forecasts so prediction-error metrics apply to it.
    """
    if detector is None:
        detector = fit_detector(config, series)
    scores = detector.score_samples(series.test_values)
    predictions = None
    if isinstance(detector, MovingAverageDetector):
        predictions = detector.predict(series.test_values)
    return ModelOutput(
        model_id=config.model_id,
        series_id=series.id,
        scores=scores,
        predictions=predictions,
    )


# ---------------------------------------------------------------------------
# External score files:  <model_id>__<series_id>.csv  with header
# t,score[,pred0,...,predd-1]
# ---------------------------------------------------------------------------


def write_scores(outputs, path):
    """Write model outputs in the external score-file format."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for out in outputs:
        target = path / f"{out.model_id}__{out.series_id}.csv"
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh)
            dim = 0 if out.predictions is None else out.predictions.shape[1]
            writer.writerow(["t", "score"] + [f"pred{j}" for j in range(dim)])
            for t in range(out.scores.shape[0]):
                row = [t, repr(float(out.scores[t]))]
                if out.predictions is not None:
                    row += [repr(float(v)) for v in out.predictions[t]]
                writer.writerow(row)


def ingest_external(path, dataset, ignore_unknown=False):
    """Load score files for externally trained models.

    Every file must reference a series of ``dataset`` and carry exactly
    one score per test-segment point; prediction columns, when present,
    populate ``ModelOutput.predictions``. With ``ignore_unknown`` set,
    files whose series id is not in the dataset (e.g. scores on injected
    copies) are parsed without the length check instead of rejected.

    Raises
    ------
    LoadError
        On unknown series ids, length mismatches, or invalid scores.
    """
    path = Path(path)
    if not path.exists():
        raise LoadError(f"no such path: {path}")
    files = sorted(path.glob("*.csv")) if path.is_dir() else [path]
    if not files:
        raise LoadError(f"{path}: no score files found")

    outputs = []
    for f in files:
        stem = f.stem
        if "__" not in stem:
            raise LoadError(f"{f}: expected <model_id>__<series_id>.csv")
        model_id, series_id = stem.split("__", 1)
        series = None
        try:
            series = dataset.get(series_id)
        except KeyError:
            if not ignore_unknown:
                raise LoadError(f"{f}: unknown series id {series_id!r}") from None

        scores, preds = [], []
        with open(f, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or len(header) < 2 or header[1] != "score":
                raise LoadError(f"{f}:1: header must be t,score[,pred...]")
            dim = len(header) - 2
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise LoadError(
                        f"{f}:{lineno}: expected {len(header)} fields, got {len(row)}"
                    )
                try:
                    value = float(row[1])
                    pred = [float(v) for v in row[2:]]
                except ValueError:
                    raise LoadError(f"{f}:{lineno}: malformed value") from None
                if not math.isfinite(value) or value < 0:
                    raise LoadError(f"{f}:{lineno}: score must be finite and >= 0")
                scores.append(value)
                if dim:
                    preds.append(pred)

        if series is not None and len(scores) != series.test_length:
            raise LoadError(
                f"{f}: {len(scores)} scores for test length {series.test_length} "
                f"of series {series_id!r}"
            )
        try:
            outputs.append(
                ModelOutput(
                    model_id=model_id,
                    series_id=series_id,
                    scores=np.asarray(scores),
                    predictions=np.asarray(preds) if dim else None,
                )
            )
        except ValueError as exc:
            raise LoadError(f"{f}: {exc}") from exc
    return outputs
