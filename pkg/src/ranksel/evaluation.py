"""Label-based quality metrics: point-adjusted precision/recall, adjusted best
F1, dataset-level quality, and the paired Wilcoxon signed-rank test."""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .validation import check_binary_labels


@dataclass(frozen=True)
class EvalResult:
    """Best adjusted F1 over the threshold sweep, with its operating point.

    ``degenerate`` flags series whose labels contain no anomaly, for
    which the metric is fixed at 0.
    """

    best_f1: float
    best_threshold: float
    precision: float
    recall: float
    degenerate: bool = False


def _label_segments(labels):
    """(start, end) pairs of maximal contiguous runs of 1s."""
    padded = np.diff(labels.astype(np.int8), prepend=0, append=0)
    starts = np.flatnonzero(padded == 1)
    ends = np.flatnonzero(padded == -1)
    return starts, ends


def point_adjust(predicted, labels):
    """Expand any hit inside a labeled anomalous segment to the whole segment.

    For each maximal contiguous run of 1s in ``labels``, if ``predicted``
    contains at least one 1 inside the run, the whole run is set to 1.
    Predictions outside label runs are untouched.
    """
    predicted = check_binary_labels(predicted, name="predicted")
    labels = check_binary_labels(labels, length=predicted.shape[0])
    adjusted = predicted.copy()
    for start, end in zip(*_label_segments(labels)):
        if adjusted[start:end].any():
            adjusted[start:end] = 1
    return adjusted


def _f1(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def adjusted_best_f1(scores, labels):
    """Maximum point-adjusted F1 over all score thresholds.

    Predictions are ``score > threshold``. The sweep covers every
    distinct score value plus a sentinel below the minimum, which
    together realize every achievable prediction set, so the maximum is
    exact. F1 ties resolve to the lowest threshold. Series without any
    positive label return a degenerate result with ``best_f1 = 0``.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1:
        raise ValueError("scores must be 1-d")
    if not np.isfinite(scores).all():
        raise ValueError("scores contain non-finite entries")
    labels = check_binary_labels(labels, length=scores.shape[0])

    total_pos = int(labels.sum())
    if total_pos == 0:
        return EvalResult(0.0, np.inf, 0.0, 0.0, degenerate=True)

    starts, ends = _label_segments(labels)
    seg_lengths = (ends - starts).astype(np.int64)
    seg_max = np.array([scores[s:e].max() for s, e in zip(starts, ends)])
    outside = np.sort(scores[labels == 0])

    # After adjustment a segment is fully detected iff its max score clears
    # the threshold, so per-threshold counts reduce to suffix sums.
    order = np.argsort(seg_max)
    seg_max_sorted = seg_max[order]
    len_suffix = np.concatenate(
        [np.cumsum(seg_lengths[order][::-1])[::-1], [0]]
    )

    thresholds = np.concatenate([[-np.inf], np.unique(scores)])
    best = None
    for tau in thresholds:
        tp = int(len_suffix[np.searchsorted(seg_max_sorted, tau, side="right")])
        fp = outside.size - int(np.searchsorted(outside, tau, side="right"))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / total_pos
        f1 = _f1(precision, recall)
        if best is None or f1 > best.best_f1:
            best = EvalResult(f1, float(tau), precision, recall)
    return best


def dataset_quality(dataset, outputs):
    """Unweighted mean of per-series adjusted best F1 for one model.

    Parameters
    ----------
    dataset : Dataset
        Every series must carry labels.
    outputs : mapping or iterable of ModelOutput
        One output per series, keyed (or identified) by series id; score
        length must match the series' test segment.
    """
    if not isinstance(outputs, dict):
        outputs = {o.series_id: o for o in outputs}
    values = []
    for series in dataset:
        if series.id not in outputs:
            raise ValueError(f"no model output for series {series.id!r}")
        if series.labels is None:
            raise ValueError(f"series {series.id!r} has no labels")
        out = outputs[series.id]
        if out.scores.shape[0] != series.test_length:
            raise ValueError(
                f"series {series.id!r}: {out.scores.shape[0]} scores for "
                f"test length {series.test_length}"
            )
        values.append(adjusted_best_f1(out.scores, series.test_labels).best_f1)
    return float(np.mean(values))


WilcoxonResult = namedtuple("WilcoxonResult", ["statistic", "p_value", "significant"])

_EXACT_LIMIT = 20


def _exact_signed_rank_p(ranks, w_plus):
    """P(W+ >= w_obs) under the null, by counting sign assignments.

    Works on doubled ranks so average ranks from ties stay integral; the
    count distribution is built by dynamic programming, equivalent to
    enumerating all 2^n assignments.
    """
    doubled = np.rint(2 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    w2 = int(np.rint(2 * w_plus))
    return counts[w2:].sum() / 2.0 ** len(ranks)


def wilcoxon_one_sided(paired_a, paired_b, alpha=0.05):
    """Paired Wilcoxon signed-rank test of H1: a > b.

    Zero differences are dropped. Tied absolute differences receive
    average ranks. The p-value is exact (sign-assignment enumeration)
    for n <= 20 and a tie-corrected normal approximation with continuity
    correction beyond that.

    Returns
    -------
    WilcoxonResult
        (W+ statistic, one-sided p-value, p <= alpha).
    """
    a = np.asarray(paired_a, dtype=float)
    b = np.asarray(paired_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and equally long")
    diffs = a - b
    diffs = diffs[diffs != 0]
    n = diffs.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, False)

    ranks = stats.rankdata(np.abs(diffs))
    w_plus = float(ranks[diffs > 0].sum())

    if n <= _EXACT_LIMIT:
        p = float(_exact_signed_rank_p(ranks, w_plus))
    else:
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(np.abs(diffs), return_counts=True)
        tie_term = float((tie_counts**3 - tie_counts).sum()) / 48.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
        z = (w_plus - mean - 0.5) / np.sqrt(var)
        p = float(stats.norm.sf(z))
    return WilcoxonResult(w_plus, p, bool(p <= alpha))
