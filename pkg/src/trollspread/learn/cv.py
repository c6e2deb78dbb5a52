from __future__ import annotations

import numpy as np


def stratified_kfold(labels, k: int, rng_seed: int = 0) -> np.ndarray:
    """Assign each row to one of ``k`` folds, preserving class proportions.

    Rows of each class are shuffled and dealt round-robin; the deal for the
    second class continues where the first stopped, so fold sizes differ by
    at most one and so do per-class counts.
    """
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if k < 2:
        raise ValueError("k must be at least 2")
    classes, counts = np.unique(y, return_counts=True)
    if np.any(counts < k):
        raise ValueError(f"every class needs at least k={k} rows, got counts {dict(zip(classes.tolist(), counts.tolist()))}")
    rng = np.random.default_rng(rng_seed)
    folds = np.empty(y.size, dtype=np.int64)
    offset = 0
    for c in classes:
        rows = np.flatnonzero(y == c)
        rows = rows[rng.permutation(rows.size)]
        folds[rows] = (offset + np.arange(rows.size)) % k
        offset = (offset + rows.size) % k
    return folds


def fold_indices(folds: np.ndarray, k: int):
    """Yield ``(fold, train_rows, test_rows)`` for every fold."""
    for f in range(k):
        test = np.flatnonzero(folds == f)
        train = np.flatnonzero(folds != f)
        yield f, train, test
