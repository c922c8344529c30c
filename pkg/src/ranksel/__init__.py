"""Unsupervised model selection for time-series anomaly detection.

Selects the best anomaly-detection model from a candidate set without
anomaly labels by computing label-free surrogate metrics (prediction
error, model centrality, performance on injected synthetic anomalies)
and robustly aggregating the model rankings they induce.
"""

from .data import (
    Dataset,
    LoadError,
    ModelOutput,
    TimeSeries,
    derive_seed,
    load_dataset,
    rank_from_values,
    split_selection_evaluation,
    subsample,
    write_dataset,
)
from .detectors import (
    DetectorConfig,
    KnnDetector,
    MovingAverageDetector,
    default_roster,
    ingest_external,
    score_series,
    write_scores,
)
from .evaluation import (
    EvalResult,
    adjusted_best_f1,
    dataset_quality,
    point_adjust,
    wilcoxon_one_sided,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ModelSelector,
    SelectionReport,
    pairwise_tests,
    run_experiment,
)
from .injection import (
    INJECTION_KINDS,
    InjectedSeries,
    InjectionSpec,
    estimate_period,
    inject,
)
from .rankagg import (
    MallowsParams,
    RankingSet,
    borda,
    borda_theory_check,
    empirical_influence,
    kemeny_exact,
    kendall_tau,
    mallows_sample,
    mean_kendall_distance,
    minimum_influence_metric,
    partial_borda,
    robust_borda,
    simulate_outlier_impact,
    trim_by_influence,
)
from .surrogate import (
    DEFAULT_AGGREGATION_METRICS,
    METRIC_CATALOG,
    MetricValue,
    centrality,
    injection_metric,
    metric_rankings,
    prediction_error,
)
from .synth import make_benchmark

__all__ = [
    "Dataset",
    "LoadError",
    "ModelOutput",
    "TimeSeries",
    "derive_seed",
    "load_dataset",
    "rank_from_values",
    "split_selection_evaluation",
    "subsample",
    "write_dataset",
    "DetectorConfig",
    "KnnDetector",
    "MovingAverageDetector",
    "default_roster",
    "ingest_external",
    "score_series",
    "write_scores",
    "EvalResult",
    "adjusted_best_f1",
    "dataset_quality",
    "point_adjust",
    "wilcoxon_one_sided",
    "ConfigError",
    "ExperimentConfig",
    "ModelSelector",
    "SelectionReport",
    "pairwise_tests",
    "run_experiment",
    "INJECTION_KINDS",
    "InjectedSeries",
    "InjectionSpec",
    "estimate_period",
    "inject",
    "MallowsParams",
    "RankingSet",
    "borda",
    "borda_theory_check",
    "empirical_influence",
    "kemeny_exact",
    "kendall_tau",
    "mallows_sample",
    "mean_kendall_distance",
    "minimum_influence_metric",
    "partial_borda",
    "robust_borda",
    "simulate_outlier_impact",
    "trim_by_influence",
    "DEFAULT_AGGREGATION_METRICS",
    "METRIC_CATALOG",
    "MetricValue",
    "centrality",
    "injection_metric",
    "metric_rankings",
    "prediction_error",
    "make_benchmark",
]

__version__ = "0.1.0"
