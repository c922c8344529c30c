"""Input validation helpers shared across the package."""

import numpy as np


def as_float_matrix(values, name="values"):
    """Coerce to a 2-d float array of shape (T, d), validating finiteness.

    1-d input is treated as a univariate series and reshaped to (T, 1).
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-d or 2-d, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_binary_labels(labels, length=None, name="labels"):
    """Validate a 0/1 label vector, optionally of a required length."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got ndim={arr.ndim}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    return arr.astype(np.int8)


def check_scores(scores, length=None, name="scores"):
    """Validate a finite, non-negative 1-d score vector."""
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got ndim={arr.ndim}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    if (arr < 0).any():
        raise ValueError(f"{name} contains negative entries")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    return arr


def check_permutation(ranks, n=None, name="ranks"):
    """Validate that ``ranks`` is a bijection onto {1..N} and return it as int64.

    ``ranks[i]`` is the rank of item i, with rank 1 the best.
    """
    arr = np.asarray(ranks)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 1-d array")
    if not np.issubdtype(arr.dtype, np.integer):
        as_int = arr.astype(np.int64)
        if not np.array_equal(as_int, arr):
            raise ValueError(f"{name} must be integer-valued")
        arr = as_int
    arr = arr.astype(np.int64)
    size = arr.shape[0]
    if n is not None and size != n:
        raise ValueError(f"{name} has length {size}, expected {n}")
    if not np.array_equal(np.sort(arr), np.arange(1, size + 1)):
        raise ValueError(f"{name} is not a permutation of 1..{size}")
    return arr
