"""End-to-end experiment runner: score models, compute surrogate metrics,
aggregate rankings, select, and evaluate against labeled baselines.

The runner validates that every roster model can score every series before
any repetition runs. Injected copies are drawn once per experiment from the
master seed (copy ids are reproducible via the ``inject`` CLI, so external
models can be scored on them offline); repetitions differ by their
selection/evaluation split and tie-break randomness.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .data import (
    Dataset,
    derive_seed,
    split_selection_evaluation,
    subsample,
)
from .detectors import (
    DetectorConfig,
    default_roster,
    fit_detector,
    ingest_external,
    score_series,
)
from .evaluation import adjusted_best_f1, wilcoxon_one_sided
from .injection import InjectionSpec, estimate_period, inject
from .rankagg import (
    borda,
    empirical_influence,
    kemeny_exact,
    minimum_influence_metric,
    partial_borda,
    robust_borda,
    trim_by_influence,
)
from .surrogate import (
    CENTRALITY_METRICS,
    DEFAULT_AGGREGATION_METRICS,
    INJECTION_METRICS,
    METRIC_CATALOG,
    PREDICTION_ERROR_METRICS,
    MetricValue,
    centrality,
    injection_metric,
    metric_rankings,
    model_distance_matrix,
    prediction_error,
    rankings_to_set,
)

AGGREGATION_METHODS = ("borda", "partial", "trimmed", "mim", "robust", "kemeny")
EI_METHODS = ("trimmed", "mim", "robust")
BASELINES = ("supervised", "oracle", "random")
CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Raised when an experiment configuration fails validation."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run depends on besides the data itself."""

    roster: tuple = ()
    external_dirs: tuple = ()
    metrics: tuple = DEFAULT_AGGREGATION_METRICS
    methods: tuple = ("borda", "partial", "trimmed", "mim", "robust")
    k: int | None = None
    copies: int = 5
    repetitions: int = 5
    selection_fraction: float = 0.2
    granularity: str = "dataset"
    seed: int = 0
    subsample_threshold: int = 2560
    subsample_factor: int = 10

    def __post_init__(self):
        roster = tuple(self.roster) if self.roster else tuple(default_roster())
        object.__setattr__(self, "roster", roster)
        object.__setattr__(self, "external_dirs", tuple(self.external_dirs))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "methods", tuple(self.methods))

        if not self.metrics:
            raise ConfigError("metric subset must be non-empty")
        unknown = set(self.metrics) - set(METRIC_CATALOG)
        if unknown:
            raise ConfigError(f"unknown metrics: {sorted(unknown)}")
        unknown = set(self.methods) - set(AGGREGATION_METHODS)
        if unknown:
            raise ConfigError(f"unknown aggregation methods: {sorted(unknown)}")
        if len(self.metrics) < 2 and set(self.methods) & set(EI_METHODS):
            raise ConfigError(
                "influence-based methods need at least 2 metrics to aggregate"
            )
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.copies < 1:
            raise ConfigError("copies must be >= 1")
        if not 0.0 < self.selection_fraction < 1.0:
            raise ConfigError("selection_fraction must be in (0, 1)")
        if self.granularity not in ("dataset", "series"):
            raise ConfigError(f"unknown granularity {self.granularity!r}")
        ids = [c.model_id for c in roster]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate model ids in roster")

    def effective_k(self, n_models):
        if self.k is not None:
            if not 1 <= self.k <= n_models:
                raise ConfigError(f"k={self.k} outside [1, {n_models}]")
            return self.k
        return max(1, -(-n_models // 2))  # ceil(N / 2)

    def to_dict(self):
        return {
            "schema": CONFIG_SCHEMA_VERSION,
            "roster": {
                "builtin": [
                    {
                        "kind": c.kind,
                        "model_id": c.model_id,
                        "window": c.window,
                        "k": c.k,
                    }
                    for c in self.roster
                ],
                "external": list(self.external_dirs),
            },
            "metrics": list(self.metrics),
            "methods": list(self.methods),
            "k": self.k,
            "copies": self.copies,
            "repetitions": self.repetitions,
            "selection_fraction": self.selection_fraction,
            "granularity": self.granularity,
            "seed": self.seed,
            "subsample": {
                "threshold": self.subsample_threshold,
                "factor": self.subsample_factor,
            },
        }


def _parse_roster(payload):
    builtin = payload.get("builtin", "default")
    if builtin == "default":
        roster = default_roster()
    else:
        try:
            roster = [
                DetectorConfig(
                    kind=item["kind"],
                    model_id=item["model_id"],
                    window=item.get("window", 16),
                    k=item.get("k", 1),
                )
                for item in builtin
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid roster entry: {exc}") from exc
    return tuple(roster), tuple(payload.get("external", ()))


def config_from_dict(payload):
    """Build an ExperimentConfig from a parsed config JSON object."""
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    if payload.get("schema") != CONFIG_SCHEMA_VERSION:
        raise ConfigError(
            f"config schema must be {CONFIG_SCHEMA_VERSION}, got {payload.get('schema')!r}"
        )
    roster, external = _parse_roster(payload.get("roster", {}))
    metrics = payload.get("metrics", list(DEFAULT_AGGREGATION_METRICS))
    if metrics == "all":
        metrics = list(METRIC_CATALOG)
    subsample_cfg = payload.get("subsample", {})
    try:
        return ExperimentConfig(
            roster=roster,
            external_dirs=external,
            metrics=tuple(metrics),
            methods=tuple(payload.get("methods", ("borda", "partial", "trimmed", "mim", "robust"))),
            k=payload.get("k"),
            copies=int(payload.get("copies", 5)),
            repetitions=int(payload.get("repetitions", 5)),
            selection_fraction=float(payload.get("selection_fraction", 0.2)),
            granularity=payload.get("granularity", "dataset"),
            seed=int(payload.get("seed", 0)),
            subsample_threshold=int(subsample_cfg.get("threshold", 2560)),
            subsample_factor=int(subsample_cfg.get("factor", 10)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def read_config(path):
    """Parse a config file into (ExperimentConfig, dataset references).

    Dataset references are (name, path, format) tuples from the config's
    ``dataset`` (single) or ``datasets`` (list) field.
    """
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
    config = config_from_dict(payload)
    refs = payload.get("datasets")
    if refs is None:
        single = payload.get("dataset")
        refs = [single] if single is not None else []
    dataset_refs = []
    for ref in refs:
        if not isinstance(ref, dict) or "path" not in ref:
            raise ConfigError("each dataset reference needs a 'path'")
        dataset_refs.append(
            (ref.get("name"), ref["path"], ref.get("format", "csv"))
        )
    return config, dataset_refs


# ---------------------------------------------------------------------------
# Model pool: fitted built-ins plus ingested external scores
# ---------------------------------------------------------------------------


class ModelPool:
    """All roster models scored (or scorable) on one dataset.

    Fitting and base scoring happen eagerly so unscorable series fail
    before any repetition runs. Fitted detectors are keyed by source
    series, which lets injected copies reuse them: injection never
    touches the train segment.
    """

    def __init__(self, dataset, roster, external_dirs=()):
        self.dataset = dataset
        self.configs = {c.model_id: c for c in roster}
        self._fitted = {}
        self._base = {}
        for series in dataset:
            for config in roster:
                detector = fit_detector(config, series)
                self._fitted[(config.model_id, series.id)] = detector
                self._base[(config.model_id, series.id)] = score_series(
                    config, series, detector=detector
                )

        self._external = {}
        external_ids = set()
        for directory in external_dirs:
            for out in ingest_external(directory, dataset, ignore_unknown=True):
                if out.model_id in self.configs:
                    raise ValueError(
                        f"external model id {out.model_id!r} collides with a "
                        f"built-in roster id"
                    )
                self._external[(out.model_id, out.series_id)] = out
                external_ids.add(out.model_id)
        for model_id in sorted(external_ids):
            missing = [
                s.id for s in dataset if (model_id, s.id) not in self._external
            ]
            if missing:
                raise ValueError(
                    f"external model {model_id!r} lacks scores for series {missing}"
                )
        self.model_ids = sorted(list(self.configs) + sorted(external_ids))
        self._periods = {}

    def period(self, series):
        if series.id not in self._periods:
            self._periods[series.id] = estimate_period(series)
        return self._periods[series.id]

    def base_output(self, model_id, series_id):
        if model_id in self.configs:
            return self._base[(model_id, series_id)]
        return self._external[(model_id, series_id)]

    def base_outputs(self, model_id, series_ids=None):
        ids = series_ids if series_ids is not None else self.dataset.ids
        return {sid: self.base_output(model_id, sid) for sid in ids}

    def score(self, model_id, series, source_id=None):
        """Score any series, including injected copies of a source series."""
        source_id = source_id or series.id
        if model_id in self.configs:
            return score_series(
                self.configs[model_id],
                series,
                detector=self._fitted[(model_id, source_id)],
            )
        out = self._external.get((model_id, series.id))
        if out is None:
            raise ValueError(
                f"external model {model_id!r} has no score file for series "
                f"{series.id!r}; provide {model_id}__{series.id}.csv"
            )
        if out.scores.shape[0] != series.test_length:
            raise ValueError(
                f"external model {model_id!r} scored {out.scores.shape[0]} points "
                f"for series {series.id!r} with test length {series.test_length}"
            )
        return out


def injected_copy_id(series_id, kind, index):
    """Deterministic id for an injected copy, shared by CLI and harness."""
    return f"{series_id}.{kind}.c{index}"


def injection_plan(dataset, kinds, copies, seed, periods=None):
    """All injected copies of an experiment, deterministically from ``seed``.

    Yields (kind, source series, copy index, InjectedSeries-as-TimeSeries).
    """
    for series in dataset:
        period = (periods or {}).get(series.id)
        for kind in kinds:
            for index in range(copies):
                injected = inject(
                    series,
                    InjectionSpec(kind=kind),
                    seed=derive_seed(seed, "inject", series.id, kind, index),
                    period=period,
                )
                yield kind, series, index, injected.to_series(
                    injected_copy_id(series.id, kind, index)
                )


class MetricEngine:
    """Per-series surrogate-metric cells, combined per evaluation subset."""

    def __init__(self, pool, metrics, copies, seed):
        self.pool = pool
        self.metrics = tuple(metrics)
        self.copies = copies
        self.seed = seed
        self._injection = None
        self._prediction = None
        self._distances = None

    @property
    def injection_kinds(self):
        return [m for m in self.metrics if m in INJECTION_METRICS]

    def _injection_cells(self):
        # labels and per-model scores for every (series, kind, copy)
        if self._injection is not None:
            return self._injection
        pool = self.pool
        cells = {
            kind: {
                s.id: {"labels": [], "scores": {m: [] for m in pool.model_ids}}
                for s in pool.dataset
            }
            for kind in self.injection_kinds
        }
        periods = {s.id: pool.period(s) for s in pool.dataset}
        plan = injection_plan(
            pool.dataset, self.injection_kinds, self.copies, self.seed, periods
        )
        for kind, source, _, copy_series in plan:
            cell = cells[kind][source.id]
            cell["labels"].append(copy_series.test_labels)
            for model_id in pool.model_ids:
                out = pool.score(model_id, copy_series, source_id=source.id)
                cell["scores"][model_id].append(out.scores)
        self._injection = cells
        return cells

    def _prediction_cells(self):
        if self._prediction is not None:
            return self._prediction
        pool = self.pool
        cells = {}
        for series in pool.dataset:
            single = Dataset(name=series.id, series=(series,))
            by_model = {
                m: {series.id: pool.base_output(m, series.id)}
                for m in pool.model_ids
            }
            cells[series.id] = {
                (v.metric_id, v.model_id): v.value
                for v in prediction_error(single, by_model)
            }
        self._prediction = cells
        return cells

    def _distance_cells(self):
        if self._distances is not None:
            return self._distances
        pool = self.pool
        cells = {}
        for series in pool.dataset:
            by_model = {
                m: {series.id: pool.base_output(m, series.id)}
                for m in pool.model_ids
            }
            ids, matrix = model_distance_matrix(by_model, seed=self.seed)
            cells[series.id] = (ids, matrix)
        self._distances = cells
        return cells

    def table(self, series_ids):
        """The MetricValue table over a subset of series."""
        series_ids = list(series_ids)
        values = []
        for kind in self.injection_kinds:
            cells = self._injection_cells()[kind]
            labels, scores = [], {m: [] for m in self.pool.model_ids}
            for sid in series_ids:
                labels.extend(cells[sid]["labels"])
                for m in self.pool.model_ids:
                    scores[m].extend(cells[sid]["scores"][m])
            values.extend(injection_metric(labels, scores, kind))
        if set(self.metrics) & set(PREDICTION_ERROR_METRICS):
            cells = self._prediction_cells()
            for metric_id in PREDICTION_ERROR_METRICS:
                if metric_id not in self.metrics:
                    continue
                for model_id in self.pool.model_ids:
                    per_series = [cells[sid][(metric_id, model_id)] for sid in series_ids]
                    value = (
                        None
                        if any(v is None for v in per_series)
                        else float(np.mean(per_series))
                    )
                    values.append(
                        MetricValue(metric_id, model_id, value, "lower_is_better")
                    )
        centrality_ks = [
            CENTRALITY_METRICS[m] for m in self.metrics if m in CENTRALITY_METRICS
        ]
        if centrality_ks:
            cells = self._distance_cells()
            ids = cells[series_ids[0]][0]
            matrix = np.mean([cells[sid][1] for sid in series_ids], axis=0)
            for k in centrality_ks:
                values.extend(centrality(None, k, distances=(ids, matrix)))
        return values


# ---------------------------------------------------------------------------
# Aggregation strategies
# ---------------------------------------------------------------------------


def aggregate_rankings(ranking_set, method, k, seed=0):
    """Dispatch one aggregation method over a ranking set."""
    if method == "borda":
        return borda(ranking_set, seed=seed)
    if method == "partial":
        return partial_borda(ranking_set, k, seed=seed)
    if method == "trimmed":
        kept, _ = trim_by_influence(ranking_set, seed=seed)
        return borda(kept, seed=seed)
    if method == "mim":
        return minimum_influence_metric(ranking_set, seed=seed)[1]
    if method == "robust":
        return robust_borda(ranking_set, k, seed=seed)
    if method == "kemeny":
        return kemeny_exact(ranking_set)
    raise ValueError(f"unknown aggregation method {method!r}")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class RepetitionResult:
    """Everything one repetition produced."""

    repetition: int
    selection_ids: list
    evaluation_ids: list
    metric_values: list
    rankings: dict
    influence: dict
    discarded: list
    aggregate_rankings: dict
    selected: dict
    strategy_f1: dict
    model_eval_f1: dict
    per_series: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "repetition": self.repetition,
            "selection_ids": list(self.selection_ids),
            "evaluation_ids": list(self.evaluation_ids),
            "metric_values": [
                {
                    "metric_id": v.metric_id,
                    "model_id": v.model_id,
                    "value": v.value,
                    "direction": v.direction,
                }
                for v in self.metric_values
            ],
            "rankings": {m: [int(r) for r in v] for m, v in self.rankings.items()},
            "influence": self.influence,
            "discarded": list(self.discarded),
            "aggregate_rankings": {
                m: [int(r) for r in v] for m, v in self.aggregate_rankings.items()
            },
            "selected": dict(self.selected),
            "strategy_f1": dict(self.strategy_f1),
            "model_eval_f1": dict(self.model_eval_f1),
            "per_series": self.per_series,
        }


@dataclass
class SelectionReport:
    """Per-dataset record of metrics, rankings, selections and baselines."""

    dataset: str
    model_ids: list
    config: dict
    repetitions: list
    pairwise: dict

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "model_ids": list(self.model_ids),
            "config": self.config,
            "repetitions": [r.to_dict() for r in self.repetitions],
            "pairwise": self.pairwise,
        }

    def to_json(self, **kwargs):
        kwargs.setdefault("sort_keys", True)
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)

    @property
    def strategies(self):
        return sorted(self.repetitions[0].strategy_f1)

    def strategy_series(self, strategy):
        return [r.strategy_f1[strategy] for r in self.repetitions]


def _series_f1(pool, model_id, series):
    out = pool.base_output(model_id, series.id)
    return adjusted_best_f1(out.scores, series.test_labels).best_f1


def _mean_f1(pool, model_id, series_list):
    return float(np.mean([_series_f1(pool, model_id, s) for s in series_list]))


def _dataset_pairwise(strategy_f1_by_rep, alpha=0.05):
    strategies = sorted(strategy_f1_by_rep[0])
    table = {}
    for a in strategies:
        row = {}
        for b in strategies:
            if a == b:
                continue
            p = wilcoxon_one_sided(
                [rep[a] for rep in strategy_f1_by_rep],
                [rep[b] for rep in strategy_f1_by_rep],
                alpha=alpha,
            )
            row[b] = {"p_value": p.p_value, "significant": p.significant}
        table[a] = row
    return table


def run_experiment(dataset, config):
    """Run the full selection experiment on one dataset.

    Per repetition: split series into selection/evaluation sets, compute
    the surrogate-metric table on the evaluation set only, build one
    ranking per metric, aggregate, select the top-1 model per strategy,
    and evaluate every strategy's selected model with labels on the
    evaluation set. Baselines: supervised selection (best labeled F1 on
    the selection split), oracle (best on the evaluation split), and the
    exact random expectation (roster-mean F1).
    """
    for series in dataset:
        if series.labels is None:
            raise ValueError(
                f"series {series.id!r} has no labels; the experiment harness "
                f"evaluates selections against labels"
            )
    dataset = Dataset(
        name=dataset.name,
        series=tuple(
            subsample(s, config.subsample_threshold, config.subsample_factor)
            for s in dataset
        ),
    )
    pool = ModelPool(dataset, config.roster, config.external_dirs)
    if "kemeny" in config.methods and len(pool.model_ids) > 12:
        raise ConfigError(
            f"kemeny method needs at most 12 models, roster has {len(pool.model_ids)}"
        )
    engine = MetricEngine(pool, config.metrics, config.copies, config.seed)
    k_eff = config.effective_k(len(pool.model_ids))

    repetitions = []
    for rep in range(config.repetitions):
        rep_seed = derive_seed(config.seed, "rep", rep)
        selection, evaluation = split_selection_evaluation(
            dataset, config.selection_fraction, seed=derive_seed(rep_seed, "split")
        )
        result = _run_repetition(
            pool, engine, config, rep, rep_seed, selection, evaluation, k_eff
        )
        repetitions.append(result)

    pairwise = _dataset_pairwise([r.strategy_f1 for r in repetitions])
    return SelectionReport(
        dataset=dataset.name,
        model_ids=list(pool.model_ids),
        config=config.to_dict(),
        repetitions=repetitions,
        pairwise=pairwise,
    )


def _selection_strategies(pool, rset, rankings, config, k_eff, agg_seed):
    """Winner per aggregation method and per individual metric."""
    selected = {}
    aggregates = {}
    for method in config.methods:
        agg = aggregate_rankings(rset, method, k_eff, seed=agg_seed)
        aggregates[method] = agg
        selected[method] = pool.model_ids[int(np.argmin(agg))]
    for metric_id, ranks in rankings.items():
        selected[f"metric:{metric_id}"] = pool.model_ids[int(np.argmin(ranks))]
    return selected, aggregates


def _run_repetition(pool, engine, config, rep, rep_seed, selection, evaluation, k_eff):
    eval_ids = evaluation.ids
    agg_seed = derive_seed(rep_seed, "aggregate")

    model_eval_f1 = {
        m: _mean_f1(pool, m, list(evaluation)) for m in pool.model_ids
    }
    selected = {}
    aggregates = {}
    per_series = {}

    if config.granularity == "dataset":
        table = engine.table(eval_ids)
        rankings = metric_rankings(
            table, pool.model_ids, seed=derive_seed(rep_seed, "rank")
        )
        rset = rankings_to_set(rankings)
        influence = (
            dict(zip(rset.metric_ids, map(float, empirical_influence(rset, agg_seed))))
            if rset.n_rankings >= 2
            else {m: 0.0 for m in rset.metric_ids}
        )
        discarded = (
            trim_by_influence(rset, seed=agg_seed)[1] if rset.n_rankings >= 2 else []
        )
        selected, aggregates = _selection_strategies(
            pool, rset, rankings, config, k_eff, agg_seed
        )
        strategy_f1 = {s: model_eval_f1[m] for s, m in selected.items()}
        metric_values = table
    else:
        # per-series selection: one table, ranking and winner per series
        per_strategy_f1 = {}
        metric_values = []
        rankings = {}
        influence = {}
        discarded = []
        for series in evaluation:
            table = engine.table([series.id])
            metric_values.extend(table)
            series_rankings = metric_rankings(
                table, pool.model_ids, seed=derive_seed(rep_seed, "rank", series.id)
            )
            rset = rankings_to_set(series_rankings)
            series_seed = derive_seed(agg_seed, series.id)
            winners, _ = _selection_strategies(
                pool, rset, series_rankings, config, k_eff, series_seed
            )
            per_series[series.id] = dict(winners)
            for strategy, model_id in winners.items():
                per_strategy_f1.setdefault(strategy, []).append(
                    _series_f1(pool, model_id, series)
                )
        strategy_f1 = {s: float(np.mean(v)) for s, v in per_strategy_f1.items()}

    # baselines
    selection_f1 = {m: _mean_f1(pool, m, list(selection)) for m in pool.model_ids}
    supervised_choice = min(
        pool.model_ids, key=lambda m: (-selection_f1[m], m)
    )
    selected["supervised"] = supervised_choice
    strategy_f1["supervised"] = model_eval_f1[supervised_choice]
    if config.granularity == "dataset":
        oracle_choice = min(pool.model_ids, key=lambda m: (-model_eval_f1[m], m))
        selected["oracle"] = oracle_choice
        strategy_f1["oracle"] = model_eval_f1[oracle_choice]
    else:
        per_best = [
            max(_series_f1(pool, m, s) for m in pool.model_ids) for s in evaluation
        ]
        strategy_f1["oracle"] = float(np.mean(per_best))
        selected["oracle"] = "per-series"
    strategy_f1["random"] = float(np.mean(list(model_eval_f1.values())))
    selected["random"] = "expectation"

    return RepetitionResult(
        repetition=rep,
        selection_ids=selection.ids,
        evaluation_ids=eval_ids,
        metric_values=metric_values,
        rankings={m: v for m, v in rankings.items()},
        influence=influence,
        discarded=discarded,
        aggregate_rankings=aggregates,
        selected=selected,
        strategy_f1=strategy_f1,
        model_eval_f1=model_eval_f1,
        per_series=per_series,
    )


# ---------------------------------------------------------------------------
# Cross-dataset pairwise tests
# ---------------------------------------------------------------------------


@dataclass
class PairwiseTests:
    """Counts of significant pairwise wins across datasets."""

    strategies: list
    wins: dict  # wins[a][b] = datasets where a significantly beats b
    alpha: float

    def summary_rows(self):
        """Wins against supervised/random and losses to the baselines."""
        rows = []
        for s in self.strategies:
            rows.append(
                {
                    "strategy": s,
                    "wins_vs_supervised": self.wins[s].get("supervised", 0),
                    "wins_vs_random": self.wins[s].get("random", 0),
                    "losses_vs_oracle": self.wins.get("oracle", {}).get(s, 0),
                    "losses_vs_supervised": self.wins.get("supervised", {}).get(s, 0),
                    "losses_vs_random": self.wins.get("random", {}).get(s, 0),
                }
            )
        return rows


def pairwise_tests(reports, alpha=0.05):
    """One-sided Wilcoxon tests between all strategy pairs on each dataset.

    Every report must carry the same strategies and repetition count; the
    result counts, per ordered pair, the datasets with a significant win.
    """
    if not reports:
        raise ValueError("need at least one report")
    strategies = reports[0].strategies
    rep_counts = {len(r.repetitions) for r in reports}
    if len(rep_counts) != 1:
        raise ValueError(f"unequal repetition counts across datasets: {rep_counts}")
    for report in reports:
        if report.strategies != strategies:
            raise ValueError("reports disagree on strategies")
    if len(strategies) < 2:
        raise ValueError("need at least 2 strategies")

    wins = {a: {b: 0 for b in strategies if b != a} for a in strategies}
    for report in reports:
        for a in strategies:
            for b in strategies:
                if a == b:
                    continue
                result = wilcoxon_one_sided(
                    report.strategy_series(a), report.strategy_series(b), alpha=alpha
                )
                wins[a][b] += int(result.significant)
    return PairwiseTests(strategies=strategies, wins=wins, alpha=alpha)


# ---------------------------------------------------------------------------
# sklearn-style selector
# ---------------------------------------------------------------------------


class ModelSelector(BaseEstimator):
    """Unsupervised model selection as a fit-shaped estimator.

    ``fit`` computes the configured surrogate metrics for every roster
    model on the given dataset (no labels touched), aggregates the
    induced rankings, and exposes the winner as ``best_model_id_``.

    Parameters
    ----------
    roster : sequence of DetectorConfig, optional
        Candidate models; defaults to the built-in pool.
    external_dirs : sequence of str
        Directories of score files for externally trained models.
    metrics : sequence of str
        Surrogate metric ids to aggregate.
    method : str
        One of the aggregation methods ("borda", "partial", "trimmed",
        "mim", "robust", "kemeny").
    k : int, optional
        Top-k cutoff for partial/robust Borda; defaults to ceil(N / 2).
    copies : int
        Injected copies per (series, kind).
    seed : int
        Master seed for injections and tie-breaks.
    """

    def __init__(
        self,
        roster=None,
        external_dirs=(),
        metrics=DEFAULT_AGGREGATION_METRICS,
        method="robust",
        k=None,
        copies=5,
        seed=0,
    ):
        self.roster = roster
        self.external_dirs = external_dirs
        self.metrics = metrics
        self.method = method
        self.k = k
        self.copies = copies
        self.seed = seed

    def fit(self, X, y=None):
        """Select the best model for a Dataset (or a single TimeSeries)."""
        dataset = X
        if not isinstance(dataset, Dataset):
            dataset = Dataset(name=getattr(X, "id", "data"), series=(X,))
        config = ExperimentConfig(
            roster=tuple(self.roster) if self.roster else (),
            external_dirs=tuple(self.external_dirs),
            metrics=tuple(self.metrics),
            methods=(self.method,),
            k=self.k,
            copies=self.copies,
            seed=self.seed,
        )
        pool = ModelPool(dataset, config.roster, config.external_dirs)
        engine = MetricEngine(pool, config.metrics, config.copies, config.seed)
        table = engine.table(dataset.ids)
        rankings = metric_rankings(
            table, pool.model_ids, seed=derive_seed(config.seed, "rank")
        )
        rset = rankings_to_set(rankings)
        agg_seed = derive_seed(config.seed, "aggregate")
        aggregate = aggregate_rankings(
            rset, self.method, config.effective_k(len(pool.model_ids)), seed=agg_seed
        )

        self.model_ids_ = list(pool.model_ids)
        self.metric_values_ = table
        self.rankings_ = rankings
        self.influence_ = (
            dict(zip(rset.metric_ids, map(float, empirical_influence(rset, agg_seed))))
            if rset.n_rankings >= 2
            else {m: 0.0 for m in rset.metric_ids}
        )
        self.ranking_ = aggregate
        self.best_model_id_ = pool.model_ids[int(np.argmin(aggregate))]
        return self
