"""Batch CLI: run experiments, score series, compute metrics, aggregate
rankings, inject anomalies, evaluate scores, and reproduce the synthetic
rank-aggregation experiments.

Exit codes: 0 on success, 2 on validation errors (bad config, malformed
data), 1 on runtime failures.
"""

import csv
import functools
import json
from pathlib import Path

import click
import numpy as np

from .data import LoadError, derive_seed, load_dataset
from .detectors import DetectorConfig, default_roster, ingest_external, score_series, write_scores
from .evaluation import adjusted_best_f1
from .harness import (
    ConfigError,
    MetricEngine,
    ModelPool,
    aggregate_rankings,
    injection_plan,
    pairwise_tests,
    read_config,
    run_experiment,
)
from .injection import estimate_period
from .rankagg import empirical_influence, simulate_outlier_impact, trim_by_influence
from .surrogate import DEFAULT_AGGREGATION_METRICS, METRIC_CATALOG, metric_rankings, rankings_to_set


def _validation_guard(func):
    """Map validation failures to exit code 2, runtime failures to 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, LoadError) as exc:
            raise click.UsageError(str(exc)) from exc
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - surface as exit code 1
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc

    return wrapper


@click.group()
def main():
    """Unsupervised model selection for time-series anomaly detection."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default="reports", type=click.Path(), show_default=True)
@_validation_guard
def run(config_path, out_dir):
    """Run the selection experiment for every dataset in the config."""
    config, dataset_refs = read_config(config_path)
    if not dataset_refs:
        raise ConfigError("config lists no datasets")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    reports = []
    for name, path, fmt in dataset_refs:
        dataset = load_dataset(path, format=fmt, name=name)
        report = run_experiment(dataset, config)
        reports.append(report)
        target = out / f"{report.dataset}.report.json"
        target.write_text(report.to_json())
        click.echo(f"{report.dataset}: report written to {target}")

    rollup = out / "rollup.csv"
    with open(rollup, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "repetition", "strategy", "selected_model", "f1"])
        for report in reports:
            for rep in report.repetitions:
                for strategy in sorted(rep.strategy_f1):
                    writer.writerow(
                        [
                            report.dataset,
                            rep.repetition,
                            strategy,
                            rep.selected.get(strategy, ""),
                            repr(rep.strategy_f1[strategy]),
                        ]
                    )
    click.echo(f"roll-up written to {rollup}")

    tests = pairwise_tests(reports)
    table = out / "pairwise.csv"
    with open(table, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "strategy",
                "wins_vs_supervised",
                "wins_vs_random",
                "losses_vs_oracle",
                "losses_vs_supervised",
                "losses_vs_random",
            ]
        )
        for row in tests.summary_rows():
            writer.writerow([row[k] for k in (
                "strategy",
                "wins_vs_supervised",
                "wins_vs_random",
                "losses_vs_oracle",
                "losses_vs_supervised",
                "losses_vs_random",
            )])
    click.echo(f"pairwise table written to {table}")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "ndjson"]), show_default=True)
@click.option("--kind", required=True, type=click.Choice(["moving_average", "knn"]))
@click.option("--window", default=16, show_default=True)
@click.option("--k", default=1, show_default=True, help="Neighbors (knn only)")
@click.option("--model-id", default=None, help="Defaults to a descriptive id")
@click.option("--out", "out_dir", required=True, type=click.Path())
@_validation_guard
def detect(dataset_path, fmt, kind, window, k, model_id, out_dir):
    """Score every series with one built-in detector; write score files."""
    dataset = load_dataset(dataset_path, format=fmt)
    if model_id is None:
        model_id = f"ma-w{window}" if kind == "moving_average" else f"knn-k{k}-w{window}"
    config = DetectorConfig(kind=kind, model_id=model_id, window=window, k=k)
    outputs = [score_series(config, series) for series in dataset]
    write_scores(outputs, out_dir)
    click.echo(f"{model_id}: scored {len(outputs)} series into {out_dir}")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "ndjson"]), show_default=True)
@click.option("--scores-dir", "scores_dirs", multiple=True, type=click.Path(exists=True))
@click.option("--builtin-roster/--no-builtin-roster", default=True, show_default=True)
@click.option("--which", default=",".join(DEFAULT_AGGREGATION_METRICS), show_default=True,
              help="Comma-separated metric ids, or 'all'")
@click.option("--copies", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_validation_guard
def metrics(dataset_path, fmt, scores_dirs, builtin_roster, which, copies, seed, out_dir):
    """Compute surrogate metrics and the per-metric model rankings."""
    dataset = load_dataset(dataset_path, format=fmt)
    metric_ids = tuple(METRIC_CATALOG) if which == "all" else tuple(
        m.strip() for m in which.split(",") if m.strip()
    )
    unknown = set(metric_ids) - set(METRIC_CATALOG)
    if unknown:
        raise ConfigError(f"unknown metrics: {sorted(unknown)}")
    roster = tuple(default_roster()) if builtin_roster else ()
    if not roster and not scores_dirs:
        raise ConfigError("no models: enable the built-in roster or pass --scores-dir")
    pool = ModelPool(dataset, roster, scores_dirs)
    engine = MetricEngine(pool, metric_ids, copies, seed)
    table = engine.table(dataset.ids)
    rankings = metric_rankings(table, pool.model_ids, seed=derive_seed(seed, "rank"))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table_path = out / "metrics.csv"
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric_id", "model_id", "value", "direction"])
        for v in sorted(table, key=lambda v: (v.metric_id, v.model_id)):
            writer.writerow(
                [
                    v.metric_id,
                    v.model_id,
                    "" if v.value is None else repr(v.value),
                    v.direction,
                ]
            )
    rankings_path = out / "rankings.json"
    rankings_path.write_text(
        json.dumps(
            {
                "model_ids": pool.model_ids,
                "rankings": {m: [int(r) for r in v] for m, v in rankings.items()},
            },
            indent=2,
            sort_keys=True,
        )
    )
    click.echo(f"metric table written to {table_path}")
    click.echo(f"rankings written to {rankings_path}")


@main.command()
@click.option("--rankings", "rankings_path", required=True, type=click.Path(exists=True))
@click.option("--method", default="robust", show_default=True,
              type=click.Choice(["borda", "partial", "trimmed", "mim", "robust", "kemeny"]))
@click.option("--k", default=None, type=int, help="Top-k cutoff; defaults to ceil(N/2)")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path())
@_validation_guard
def aggregate(rankings_path, method, k, seed, out_path):
    """Aggregate per-metric rankings into one model ranking."""
    payload = json.loads(Path(rankings_path).read_text())
    try:
        model_ids = payload["model_ids"]
        rankings = {m: np.asarray(v) for m, v in payload["rankings"].items()}
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{rankings_path}: expected model_ids and rankings") from exc
    rset = rankings_to_set(rankings)
    n = rset.n_items
    k_eff = k if k is not None else max(1, -(-n // 2))
    if not 1 <= k_eff <= n:
        raise ConfigError(f"k={k_eff} outside [1, {n}]")
    ranking = aggregate_rankings(rset, method, k_eff, seed=seed)
    influence = {}
    discarded = []
    if rset.n_rankings >= 2:
        influence = dict(
            zip(rset.metric_ids, map(float, empirical_influence(rset, seed=seed)))
        )
        discarded = trim_by_influence(rset, seed=seed)[1]
    result = {
        "method": method,
        "k": k_eff,
        "model_ids": model_ids,
        "ranking": [int(r) for r in ranking],
        "selected": model_ids[int(np.argmin(ranking))],
        "influence": influence,
        "discarded": discarded,
    }
    text = json.dumps(result, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(text)
        click.echo(f"aggregate written to {out_path}")
    else:
        click.echo(text)


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "ndjson"]), show_default=True)
@click.option("--kind", required=True,
              type=click.Choice(["spike", "flip", "speedup", "noise", "cutoff",
                                 "average", "scale", "wander", "contextual"]))
@click.option("--copies", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_validation_guard
def inject(dataset_path, fmt, kind, copies, seed, out_path):
    """Emit injected copies with pseudo-labels as ndjson.

    Copy ids and randomness match what `ranksel run` uses for the same
    seed, so externally computed scores on these copies line up with the
    experiment harness.
    """
    dataset = load_dataset(dataset_path, format=fmt)
    periods = {s.id: estimate_period(s) for s in dataset}
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(out, "w") as fh:
        for kind_, source, index, copy_series in injection_plan(
            dataset, [kind], copies, seed, periods
        ):
            record = {
                "id": copy_series.id,
                "values": copy_series.values.tolist(),
                "labels": copy_series.labels.tolist(),
                "kind": kind_,
                "source_id": source.id,
            }
            if copy_series.train_end is not None:
                record["train_end"] = copy_series.train_end
            fh.write(json.dumps(record) + "\n")
            count += 1
    click.echo(f"wrote {count} injected copies to {out}")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "ndjson"]), show_default=True)
@click.option("--scores-dir", "scores_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
@_validation_guard
def evaluate(dataset_path, fmt, scores_dir, out_path):
    """Adjusted best F1 of ingested scores, per series and per dataset."""
    dataset = load_dataset(dataset_path, format=fmt)
    for series in dataset:
        if series.labels is None:
            raise ConfigError(f"series {series.id!r} has no labels to evaluate against")
    outputs = ingest_external(scores_dir, dataset)
    by_model = {}
    for out in outputs:
        by_model.setdefault(out.model_id, {})[out.series_id] = out

    rows = []
    for model_id in sorted(by_model):
        per_series = []
        for series in dataset:
            out = by_model[model_id].get(series.id)
            if out is None:
                raise ConfigError(
                    f"model {model_id!r} has no scores for series {series.id!r}"
                )
            result = adjusted_best_f1(out.scores, series.test_labels)
            rows.append(
                [model_id, "series", series.id, repr(result.best_f1),
                 repr(result.precision), repr(result.recall)]
            )
            per_series.append(result.best_f1)
        rows.append(
            [model_id, "dataset", dataset.name, repr(float(np.mean(per_series))), "", ""]
        )

    header = ["model_id", "scope", "series_id", "best_f1", "precision", "recall"]
    if out_path:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        click.echo(f"evaluation written to {out_path}")
    else:
        click.echo(",".join(header))
        for row in rows:
            click.echo(",".join(str(c) for c in row))


@main.command()
@click.option("--n", "n_items", multiple=True, type=int, help="Items per ranking [50, 100]")
@click.option("--m", "n_rankings", default=50, show_default=True, help="Rankings per trial")
@click.option("--theta", "thetas", multiple=True, type=float, help="Dispersion [0.05, 0.1, 0.2]")
@click.option("--outliers", default="0,0.1,0.2,0.3,0.4", show_default=True,
              help="Comma-separated outlier fractions")
@click.option("--trials", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_validation_guard
def simulate(n_items, n_rankings, thetas, outliers, trials, seed, out_path):
    """Reproduce the synthetic outlier-impact experiments as CSV."""
    n_values = list(n_items) or [50, 100]
    theta_values = list(thetas) or [0.05, 0.1, 0.2]
    fractions = tuple(float(f) for f in outliers.split(","))
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["n", "theta", "trial", "fraction_noise", "d_median_center",
             "ranking_index", "ei", "d_to_center"]
        )
        for n in n_values:
            for theta in theta_values:
                records = simulate_outlier_impact(
                    n_items=n,
                    n_rankings=n_rankings,
                    theta=theta,
                    fractions=fractions,
                    trials=trials,
                    seed=derive_seed(seed, "grid", n, int(theta * 1000)),
                )
                for record in records:
                    for idx, (ei, dist) in enumerate(
                        zip(record.influence, record.distance_to_center)
                    ):
                        writer.writerow(
                            [n, theta, record.trial, record.fraction,
                             record.median_distance, idx, repr(float(ei)), int(dist)]
                        )
    click.echo(f"simulation written to {out}")


if __name__ == "__main__":
    main()
