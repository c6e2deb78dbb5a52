from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def _check(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and aligned")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0/1")
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    return s, y.astype(bool), n_pos, n_neg


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: (concordant + 0.5 * tied pairs) / (n_pos * n_neg)."""
    s, y, n_pos, n_neg = _check(scores, labels)
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels):
    """Tie-aware ROC points ``(fpr, tpr, thresholds)``.

    One point per distinct score, highest first, preceded by (0, 0) at an
    infinite threshold; a sample is predicted positive when ``score >= threshold``.
    """
    s, y, n_pos, n_neg = _check(scores, labels)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    last = np.r_[np.flatnonzero(np.diff(s_sorted)), s_sorted.size - 1]
    tp = np.cumsum(y_sorted)[last]
    fp = (last + 1) - tp
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, s_sorted[last]]
    return fpr, tpr, thresholds


def trapezoid_area(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def confusion_counts(scores, labels, threshold: float = 0.5) -> dict:
    """Counts with ``score >= threshold`` predicted positive."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    pred = s >= threshold
    return {
        "tp": int(np.sum(pred & y)),
        "fp": int(np.sum(pred & ~y)),
        "tn": int(np.sum(~pred & ~y)),
        "fn": int(np.sum(~pred & y)),
    }
