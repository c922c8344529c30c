"""Label-free surrogate metrics and the model rankings they induce.

Three metric classes cover the 17-metric catalog: five prediction-error
statistics (models that emit forecasts or reconstructions), nine synthetic
anomaly-injection scores, and three centrality metrics (mean Kendall
distance of a model's time-point score ranking to its K nearest models).
"""

from dataclasses import dataclass

import numpy as np

from .data import derive_seed, rank_from_values
from .evaluation import adjusted_best_f1
from .rankagg import RankingSet, _count_inversions

PREDICTION_ERROR_METRICS = ("mae", "mse", "mape", "smape", "likelihood")
INJECTION_METRICS = (
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
CENTRALITY_METRICS = {"knn1": 1, "knn3": 3, "knn5": 5}

METRIC_DIRECTIONS = {
    **{m: "lower_is_better" for m in PREDICTION_ERROR_METRICS},
    **{m: "higher_is_better" for m in INJECTION_METRICS},
    **{m: "lower_is_better" for m in CENTRALITY_METRICS},
}

# canonical catalog order; ties and reports follow it
METRIC_CATALOG = tuple(METRIC_DIRECTIONS)

# the aggregation default: injection metrics that won the preliminary round
DEFAULT_AGGREGATION_METRICS = ("scale", "noise", "cutoff", "contextual", "speedup")

_EPS = 1e-8
_VARIANCE_FLOOR = 1e-12
_CENTRALITY_SUBSAMPLE = 10_000


@dataclass(frozen=True)
class MetricValue:
    """One surrogate metric's scalar for one model; ``None`` = inapplicable."""

    metric_id: str
    model_id: str
    value: float | None
    direction: str

    def __post_init__(self):
        if self.direction not in ("lower_is_better", "higher_is_better"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.value is not None and not np.isfinite(self.value):
            raise ValueError(f"{self.metric_id}/{self.model_id}: value must be finite")


def _series_errors(x, x_hat):
    """The five error statistics for one series, averaged over dimensions."""
    residual = x - x_hat
    abs_res = np.abs(residual)
    mae = abs_res.mean(axis=0)
    mse = (residual**2).mean(axis=0)
    mape = (abs_res / np.maximum(np.abs(x), _EPS)).mean(axis=0)
    smape = (2.0 * abs_res / np.maximum(np.abs(x) + np.abs(x_hat), _EPS)).mean(axis=0)
    variance = np.maximum(mse, _VARIANCE_FLOOR)
    nll = 0.5 * np.log(2.0 * np.pi * variance) + mse / (2.0 * variance)
    return {
        "mae": mae.mean(),
        "mse": mse.mean(),
        "mape": mape.mean(),
        "smape": smape.mean(),
        "likelihood": nll.mean(),
    }


def prediction_error(dataset, outputs_by_model):
    """Prediction-error metrics per model: MAE, MSE, MAPE, SMAPE and the
    Gaussian negative log-likelihood of residuals (per-series MLE variance).

    Each statistic is averaged over dimensions, then over series; all are
    lower-is-better. Models without predictions on every series get the
    inapplicable sentinel for all five metrics.
    """
    values = []
    for model_id in sorted(outputs_by_model):
        outputs = {o.series_id: o for o in _as_outputs(outputs_by_model[model_id])}
        per_metric = {m: [] for m in PREDICTION_ERROR_METRICS}
        applicable = True
        for series in dataset:
            out = outputs.get(series.id)
            if out is None or out.predictions is None:
                applicable = False
                break
            if out.predictions.shape != series.test_values.shape:
                raise ValueError(
                    f"{model_id}/{series.id}: predictions shape "
                    f"{out.predictions.shape} != test shape {series.test_values.shape}"
                )
            errors = _series_errors(series.test_values, out.predictions)
            for m in PREDICTION_ERROR_METRICS:
                per_metric[m].append(errors[m])
        for m in PREDICTION_ERROR_METRICS:
            value = float(np.mean(per_metric[m])) if applicable else None
            values.append(MetricValue(m, model_id, value, "lower_is_better"))
    return values


def _as_outputs(outputs):
    return outputs.values() if isinstance(outputs, dict) else outputs


def _time_point_ranking(scores):
    # ties broken by time index (stable sort) so rankings are total orders
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.shape[0], dtype=np.int64)
    ranks[order] = np.arange(scores.shape[0])
    return ranks


def _normalized_kendall(ranks_a, ranks_b):
    n = ranks_a.shape[0]
    if n < 2:
        return 0.0
    order = np.argsort(ranks_a)
    return _count_inversions(ranks_b[order]) / (n * (n - 1) / 2.0)


def model_distance_matrix(outputs_by_model, seed=0):
    """Pairwise model distances: normalized Kendall distance between the
    models' time-point score rankings, averaged over series.

    Series longer than 10,000 points are compared on a seeded uniform
    subsample of 10,000 time points.

    Returns
    -------
    (list of str, ndarray of shape (N, N))
        Sorted model ids and the symmetric distance matrix.
    """
    model_ids = sorted(outputs_by_model)
    per_model = {
        m: {o.series_id: o for o in _as_outputs(outputs_by_model[m])}
        for m in model_ids
    }
    series_ids = sorted({s for m in model_ids for s in per_model[m]})
    for m in model_ids:
        missing = set(series_ids) - set(per_model[m])
        if missing:
            raise ValueError(f"model {m!r} lacks scores for series {sorted(missing)}")

    n = len(model_ids)
    total = np.zeros((n, n))
    for series_id in series_ids:
        lengths = {per_model[m][series_id].scores.shape[0] for m in model_ids}
        if len(lengths) != 1:
            raise ValueError(f"series {series_id!r}: models scored different lengths")
        (length,) = lengths
        if length > _CENTRALITY_SUBSAMPLE:
            rng = np.random.default_rng(derive_seed(seed, "centrality", series_id))
            keep = np.sort(
                rng.choice(length, size=_CENTRALITY_SUBSAMPLE, replace=False)
            )
        else:
            keep = slice(None)
        rankings = [
            _time_point_ranking(per_model[m][series_id].scores[keep])
            for m in model_ids
        ]
        for i in range(n):
            for j in range(i + 1, n):
                d = _normalized_kendall(rankings[i], rankings[j])
                total[i, j] += d
                total[j, i] += d
    return model_ids, total / len(series_ids)


def centrality(outputs_by_model, k, seed=0, distances=None):
    """Centrality metric: mean distance to each model's K nearest neighbors.

    Central models are presumed closer to the (single) ground truth, so
    the metric is lower-is-better. Pass a precomputed
    :func:`model_distance_matrix` result to score several K cheaply.
    """
    if distances is None:
        distances = model_distance_matrix(outputs_by_model, seed=seed)
    model_ids, matrix = distances
    n = len(model_ids)
    if n <= k:
        raise ValueError(f"centrality with K={k} needs more than {k} models, got {n}")
    metric_id = f"knn{k}"
    direction = METRIC_DIRECTIONS.get(metric_id, "lower_is_better")
    values = []
    for i, model_id in enumerate(model_ids):
        others = np.delete(matrix[i], i)
        nearest = np.partition(others, k - 1)[:k]
        values.append(MetricValue(metric_id, model_id, float(nearest.mean()), direction))
    return values


def injection_metric(pseudo_labels, scores_by_model, kind):
    """Mean adjusted best F1 against pseudo-labels over injected copies.

    Parameters
    ----------
    pseudo_labels : sequence of ndarray
        Test-segment pseudo-labels of each injected copy, in a fixed order.
    scores_by_model : mapping of str to sequence of ndarray
        Per model, scores on the same copies in the same order.
    kind : str
        The injection kind; becomes the metric id.
    """
    copies = list(pseudo_labels)
    if not copies:
        raise ValueError("need at least one injected copy")
    values = []
    for model_id in sorted(scores_by_model):
        scores = list(scores_by_model[model_id])
        if len(scores) != len(copies):
            raise ValueError(
                f"model {model_id!r} scored {len(scores)} of {len(copies)} copies"
            )
        f1s = [
            adjusted_best_f1(s, labels).best_f1
            for s, labels in zip(scores, copies)
        ]
        values.append(
            MetricValue(kind, model_id, float(np.mean(f1s)), "higher_is_better")
        )
    return values


def metric_rankings(metric_values, model_ids, seed=0):
    """One model ranking per metric id, inapplicable values ranked last.

    Every (metric, model) cell must be present. Tie-break randomness is
    derived per metric from ``seed``.
    """
    model_ids = list(model_ids)
    table = {}
    for mv in metric_values:
        table.setdefault(mv.metric_id, {})[mv.model_id] = mv
    rankings = {}
    for metric_id, row in table.items():
        missing = set(model_ids) - set(row)
        if missing:
            raise ValueError(f"metric {metric_id!r} missing models {sorted(missing)}")
        directions = {mv.direction for mv in row.values()}
        if len(directions) != 1:
            raise ValueError(f"metric {metric_id!r} mixes directions")
        vector = np.array(
            [np.nan if row[m].value is None else row[m].value for m in model_ids]
        )
        rankings[metric_id] = rank_from_values(
            vector, directions.pop(), seed=derive_seed(seed, "rank", metric_id)
        )
    return rankings


def rankings_to_set(rankings):
    """Stack per-metric rankings into a RankingSet in catalog order.

    Metric ids outside the catalog follow it alphabetically, so
    downstream tie-breaks (e.g. the minimum-influence metric) resolve by
    catalog position.
    """
    position = {m: i for i, m in enumerate(METRIC_CATALOG)}
    ordered = sorted(
        rankings, key=lambda m: (position.get(m, len(METRIC_CATALOG)), m)
    )
    return RankingSet(
        rankings=np.vstack([rankings[m] for m in ordered]),
        metric_ids=tuple(ordered),
    )
