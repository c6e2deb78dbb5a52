"""Impurity-decrease importance and partial dependence for the tree ensembles."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np


def feature_importance(model) -> np.ndarray:
    """Per-feature split gain summed over all trees, normalized to sum to one.

    A model without any split returns all zeros.
    """
    raw = model.importance()
    total = raw.sum()
    if total <= 0.0:
        return np.zeros_like(raw)
    return raw / total


def _stable_mean(p: np.ndarray) -> float:
    # shifted mean: exact when all entries are equal
    return float(p[0] + np.mean(p - p[0]))


@dataclass
class PartialDependence:
    feature: str
    levels: np.ndarray
    grid: np.ndarray
    values: np.ndarray
    constant: bool = False

    def points(self) -> list:
        """``(quantile level, grid value, pd value)`` triples."""
        return [(float(q), float(g), float(v)) for q, g, v in zip(self.levels, self.grid, self.values)]

    def to_rows(self) -> list:
        return [{"feature": self.feature, "quantile": q, "value": g, "pd": v} for q, g, v in self.points()]


def partial_dependence(model, X, feature: int, n_grid: int = 20, grid: Optional[np.ndarray] = None,
                       response: str = "probability") -> PartialDependence:
    """Mean model output with column ``feature`` clamped to each grid value.

    The default grid is the column's empirical quantiles at ``n_grid``
    equally spaced levels in [0, 1]; the levels are the x-coordinates. A
    constant column gives a single point. When ``grid`` is given the levels
    are the empirical CDF of the column at each grid value.
    ``response`` is ``"probability"`` or ``"decision"`` (log-odds, boosting only).
    """
    X = np.array(X, dtype=np.float64, copy=True)
    col = X[:, feature].copy()
    if response == "probability":
        predict = model.predict_proba
    elif response == "decision":
        predict = model.decision_function
    else:
        raise ValueError(f"unknown response {response!r}")
    constant = bool(np.all(col == col[0]))
    if grid is not None:
        grid = np.asarray(grid, dtype=np.float64)
        levels = np.searchsorted(np.sort(col), grid, side="right") / col.size
    elif constant:
        grid = col[:1].copy()
        levels = np.array([0.0])
    else:
        if n_grid < 2:
            raise ValueError("n_grid must be at least 2")
        levels = np.linspace(0.0, 1.0, n_grid)
        grid = np.quantile(col, levels)
    values = np.empty(grid.size)
    for k, v in enumerate(grid):
        X[:, feature] = v
        values[k] = _stable_mean(predict(X))
    name = getattr(model, "feature_names", None)
    label = name[feature] if name is not None else str(feature)
    return PartialDependence(label, levels, grid, values, constant)


def write_pd_csv(path, curves) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "quantile", "value", "pd"])
        for c in curves:
            for q, g, v in c.points():
                w.writerow([c.feature, repr(q), repr(g), repr(v)])
