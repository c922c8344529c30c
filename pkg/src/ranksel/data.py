"""Domain types, dataset IO, seeded randomness, splits, and score-to-rank conversion.

Time is an integer index throughout. Each series carries an optional
``train_end`` marking the train/test boundary: ``values[:train_end]`` is the
train segment (used only to fit detectors), ``values[train_end:]`` the test
segment on which scores, labels and all metrics live.
"""

import csv
import json
import math
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import as_float_matrix, check_binary_labels, check_scores

DATASET_FORMATS = ("csv", "ndjson")


class LoadError(ValueError):
    """Raised when a dataset or score file fails to parse or validate."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeSeries:
    """A d-dimensional observation sequence with optional anomaly labels.

    Parameters
    ----------
    id : str
        Identifier, unique within a dataset.
    values : array-like of shape (T, d) or (T,)
        Finite real observations; univariate input is reshaped to (T, 1).
    labels : array-like of shape (T,), optional
        0/1 anomaly labels (1 = anomaly).
    train_end : int, optional
        Index of the first test observation; ``None`` means the whole
        series is test data.
    """

    id: str
    values: np.ndarray
    labels: np.ndarray | None = None
    train_end: int | None = None

    def __post_init__(self):
        values = as_float_matrix(self.values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = check_binary_labels(self.labels, length=values.shape[0])
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
        if self.train_end is not None:
            train_end = int(self.train_end)
            if not 0 <= train_end <= values.shape[0]:
                raise ValueError(
                    f"train_end={train_end} outside [0, {values.shape[0]}]"
                )
            object.__setattr__(self, "train_end", train_end)

    @property
    def length(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def test_start(self):
        return self.train_end or 0

    @property
    def test_length(self):
        return self.length - self.test_start

    @property
    def train_values(self):
        return self.values[: self.test_start]

    @property
    def test_values(self):
        return self.values[self.test_start :]

    @property
    def test_labels(self):
        return None if self.labels is None else self.labels[self.test_start :]


@dataclass(frozen=True)
class Dataset:
    """A named, non-empty collection of series with unique ids."""

    name: str
    series: tuple = ()

    def __post_init__(self):
        series = tuple(self.series)
        if not series:
            raise ValueError("dataset must contain at least one series")
        ids = [s.id for s in series]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate series ids: {dupes}")
        object.__setattr__(self, "series", series)

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def get(self, series_id):
        for s in self.series:
            if s.id == series_id:
                return s
        raise KeyError(series_id)

    @property
    def ids(self):
        return [s.id for s in self.series]


@dataclass(frozen=True)
class ModelOutput:
    """One model's anomaly scores (and optional predictions) on a test segment."""

    model_id: str
    series_id: str
    scores: np.ndarray
    predictions: np.ndarray | None = None

    def __post_init__(self):
        scores = check_scores(self.scores)
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        if self.predictions is not None:
            preds = as_float_matrix(self.predictions, name="predictions")
            if preds.shape[0] != scores.shape[0]:
                raise ValueError(
                    f"predictions length {preds.shape[0]} != scores length {scores.shape[0]}"
                )
            preds.setflags(write=False)
            object.__setattr__(self, "predictions", preds)


# ---------------------------------------------------------------------------
# Seeded randomness
# ---------------------------------------------------------------------------


def _salt_to_int(salt):
    if isinstance(salt, str):
        return zlib.crc32(salt.encode("utf-8"))
    return int(salt)


def derive_seed(seed, *salt):
    """Deterministic child seed for (seed, *salt).

    Salts may be ints or strings; string salts hash via crc32 so derived
    seeds are stable across runs and platforms.
    """
    entropy = [int(seed)] + [_salt_to_int(s) for s in salt]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def subsample(series, threshold=2560, factor=10):
    """Decimate a long series, keeping every ``factor``-th point.

    Series with at most ``threshold`` points are returned unchanged. Both
    values and labels are strided; ``train_end`` is rescaled by integer
    division so the boundary never moves past a kept point.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if series.length <= threshold:
        return series
    labels = None if series.labels is None else series.labels[::factor]
    train_end = None if series.train_end is None else series.train_end // factor
    return TimeSeries(
        id=series.id,
        values=series.values[::factor],
        labels=labels,
        train_end=train_end,
    )


def split_selection_evaluation(dataset, selection_fraction=0.2, seed=0):
    """Randomly partition a dataset's series into selection and evaluation sets.

    The selection side receives ``round(selection_fraction * L)`` whole
    series (at least 1, and at most L - 1 so both sides are non-empty).
    The partition depends only on ``seed``; each side keeps the original
    series order.
    """
    n = len(dataset)
    if n < 2:
        raise ValueError(f"need at least 2 series to split, got {n}")
    if not 0.0 < selection_fraction < 1.0:
        raise ValueError(f"selection_fraction must be in (0, 1), got {selection_fraction}")
    n_sel = int(math.floor(selection_fraction * n + 0.5))
    n_sel = min(max(n_sel, 1), n - 1)
    rng = np.random.default_rng(seed)
    chosen = set(rng.permutation(n)[:n_sel].tolist())
    sel = [s for i, s in enumerate(dataset.series) if i in chosen]
    ev = [s for i, s in enumerate(dataset.series) if i not in chosen]
    return (
        Dataset(name=f"{dataset.name}-selection", series=tuple(sel)),
        Dataset(name=f"{dataset.name}-evaluation", series=tuple(ev)),
    )


def rank_from_values(values, direction="lower_is_better", seed=0):
    """Convert metric values into a ranking of items, 1 = best.

    NaN marks an inapplicable value and sorts strictly worse than any
    finite value. Ties (including ties among NaNs) are broken uniformly
    at random as a function of ``seed``.

    Returns
    -------
    ndarray of shape (N,)
        ``ranks[i]`` is the rank of item i; a bijection onto {1..N}.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError("values must be a non-empty 1-d array")
    if direction not in ("lower_is_better", "higher_is_better"):
        raise ValueError(f"unknown direction {direction!r}")
    if np.isinf(arr).any():
        raise ValueError("values must be finite or NaN")
    key = -arr if direction == "higher_is_better" else arr.copy()
    key[np.isnan(key)] = np.inf
    tiebreak = np.random.default_rng(seed).random(arr.shape[0])
    order = np.lexsort((tiebreak, key))
    ranks = np.empty(arr.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, arr.shape[0] + 1)
    return ranks


# ---------------------------------------------------------------------------
# Dataset IO
# ---------------------------------------------------------------------------
#
# CSV, one file per series:   header  t,x0[,x1,...,xd-1][,label]
#   optional sidecar <stem>.meta.json (or meta.json next to a single file)
#   with {"train_end": int}.
# ndjson, one JSON object per series:
#   {"id": ..., "values": [[...], ...], "labels": [...], "train_end": int}
#   A directory of .ndjson files takes missing ids from filenames.


def load_dataset(path, format="csv", name=None):
    """Load a dataset from a file or directory.

    Parameters
    ----------
    path : str or Path
        A single series file or a directory of per-series files.
    format : {"csv", "ndjson"}
    name : str, optional
        Dataset name; defaults to the file or directory stem.

    Raises
    ------
    LoadError
        On malformed rows, non-finite values, labels outside {0, 1} or
        inconsistent dimensions; the message names the file and line.
    """
    path = Path(path)
    if format not in DATASET_FORMATS:
        raise LoadError(f"unknown dataset format {format!r}")
    if not path.exists():
        raise LoadError(f"no such path: {path}")

    suffix = ".csv" if format == "csv" else ".ndjson"
    if path.is_dir():
        files = sorted(path.glob(f"*{suffix}"))
        if not files:
            raise LoadError(f"{path}: no {suffix} files found")
        single = False
    else:
        files = [path]
        single = True

    series = []
    for f in files:
        if format == "csv":
            series.append(_load_csv_series(f, allow_shared_meta=single))
        else:
            series.extend(_load_ndjson_series(f))
    try:
        return Dataset(name=name or path.stem, series=tuple(series))
    except ValueError as exc:
        raise LoadError(f"{path}: {exc}") from exc


def _read_meta(csv_path, allow_shared_meta):
    candidates = [csv_path.with_suffix(".meta.json")]
    if allow_shared_meta:
        candidates.append(csv_path.parent / "meta.json")
    for cand in candidates:
        if cand.exists():
            with open(cand) as fh:
                meta = json.load(fh)
            if not isinstance(meta, dict):
                raise LoadError(f"{cand}: metadata must be a JSON object")
            return meta
    return {}


def _load_csv_series(path, allow_shared_meta=False):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LoadError(f"{path}:1: empty file") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "t":
            raise LoadError(f"{path}:1: header must start with 't', got {header!r}")
        has_label = bool(header) and header[-1] == "label"
        dim = len(header) - 1 - int(has_label)
        if dim < 1:
            raise LoadError(f"{path}:1: header declares no value columns")

        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise LoadError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                vals = [float(v) for v in row[1 : 1 + dim]]
            except ValueError:
                raise LoadError(f"{path}:{lineno}: malformed value") from None
            if not all(math.isfinite(v) for v in vals):
                raise LoadError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
            if has_label:
                lab = row[-1].strip()
                if lab not in ("0", "1"):
                    raise LoadError(f"{path}:{lineno}: label {lab!r} not in {{0, 1}}")
                labels.append(int(lab))
    if not rows:
        raise LoadError(f"{path}: no data rows")

    meta = _read_meta(path, allow_shared_meta)
    try:
        return TimeSeries(
            id=path.stem,
            values=np.asarray(rows),
            labels=np.asarray(labels) if has_label else None,
            train_end=meta.get("train_end"),
        )
    except ValueError as exc:
        raise LoadError(f"{path}: {exc}") from exc


def _load_ndjson_series(path):
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LoadError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(record, dict) or "values" not in record:
                raise LoadError(f"{path}:{lineno}: expected an object with 'values'")
            values = record["values"]
            rows = [[v] if np.isscalar(v) else list(v) for v in values]
            widths = {len(r) for r in rows}
            if len(widths) > 1:
                raise LoadError(f"{path}:{lineno}: inconsistent dimension across rows")
            arr = np.asarray(rows, dtype=float)
            if arr.size and not np.isfinite(arr).all():
                raise LoadError(f"{path}:{lineno}: non-finite value")
            labels = record.get("labels")
            if labels is not None and not all(l in (0, 1) for l in labels):
                raise LoadError(f"{path}:{lineno}: label outside {{0, 1}}")
            try:
                out.append(
                    TimeSeries(
                        id=str(record.get("id", path.stem)),
                        values=arr,
                        labels=None if labels is None else np.asarray(labels),
                        train_end=record.get("train_end"),
                    )
                )
            except ValueError as exc:
                raise LoadError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise LoadError(f"{path}: no series records")
    return out


def write_dataset(dataset, path, format="csv"):
    """Write a dataset in a form :func:`load_dataset` round-trips exactly.

    Values are written as shortest round-trip decimal text, so
    write-then-load reproduces them bit for bit. CSV output is one file
    per series (plus a ``<id>.meta.json`` sidecar when ``train_end`` is
    set); ndjson output is a single ``.ndjson`` file, or one file per
    series when ``path`` is a directory.
    """
    path = Path(path)
    if format == "csv":
        path.mkdir(parents=True, exist_ok=True)
        for s in dataset:
            target = path / f"{s.id}.csv"
            with open(target, "w", newline="") as fh:
                writer = csv.writer(fh)
                cols = ["t"] + [f"x{j}" for j in range(s.dim)]
                if s.labels is not None:
                    cols.append("label")
                writer.writerow(cols)
                for t in range(s.length):
                    row = [t] + [repr(float(v)) for v in s.values[t]]
                    if s.labels is not None:
                        row.append(int(s.labels[t]))
                    writer.writerow(row)
            if s.train_end is not None:
                with open(path / f"{s.id}.meta.json", "w") as fh:
                    json.dump({"train_end": s.train_end}, fh)
    elif format == "ndjson":
        if path.suffix == ".ndjson":
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w") as fh:
                for s in dataset:
                    fh.write(json.dumps(_series_record(s)) + "\n")
        else:
            path.mkdir(parents=True, exist_ok=True)
            for s in dataset:
                with open(path / f"{s.id}.ndjson", "w") as fh:
                    fh.write(json.dumps(_series_record(s)) + "\n")
    else:
        raise ValueError(f"unknown dataset format {format!r}")


def _series_record(series):
    record = {"id": series.id, "values": series.values.tolist()}
    if series.labels is not None:
        record["labels"] = series.labels.tolist()
    if series.train_end is not None:
        record["train_end"] = series.train_end
    return record
