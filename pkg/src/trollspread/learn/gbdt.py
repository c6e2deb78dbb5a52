"""Gradient-boosted regression trees for binary classification (binomial deviance)."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .tree import RegressionTree, grow_tree, predict_sum, presort


@dataclass(frozen=True)
class GBDTConfig:
    n_trees: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    min_leaf: int = 5
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0:
            raise ValueError("n_trees must be non-negative")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("max_depth and min_leaf must be >= 1")


@dataclass
class BoostedEnsemble:
    init_score: float
    learning_rate: float
    trees: list
    feature_names: tuple
    config: GBDTConfig = field(default_factory=GBDTConfig)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def decision_function(self, X) -> np.ndarray:
        """Raw log-odds: ``init + learning_rate * sum(tree outputs)``."""
        return self.init_score + self.learning_rate * predict_sum(self.trees, X)

    def predict_proba(self, X) -> np.ndarray:
        """Probability of the positive class."""
        return expit(self.decision_function(X))

    def importance(self) -> np.ndarray:
        total = np.zeros(self.n_features)
        for t in self.trees:
            total += t.importance(self.n_features)
        return total

    def describe(self) -> dict:
        return {"init_score": self.init_score, "n_trees": len(self.trees),
                "config": asdict(self.config), "feature_names": list(self.feature_names)}


def binomial_deviance(y, raw) -> float:
    """Mean negative log-likelihood of labels ``y`` under log-odds ``raw``."""
    y = np.asarray(y, dtype=np.float64)
    raw = np.asarray(raw, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be 2-D with one label per row")
    if np.isnan(X).any():
        raise ValueError("X contains missing values; impute first")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0/1")
    if y.min() == y.max():
        raise ValueError("both classes must be present")
    return X, y.astype(np.float64)


def fit_gbdt(X, y, config: Optional[GBDTConfig] = None, feature_names=None,
             callback: Optional[Callable] = None) -> BoostedEnsemble:
    """Fit a boosted ensemble.

    Each stage fits a regression tree to the negative gradient ``y - p`` of
    the binomial deviance and sets every leaf to one Newton step,
    ``sum(r) / sum(p (1 - p))`` over its rows. ``callback(stage, raw, residual)``
    is invoked before each tree is grown.
    """
    config = config or GBDTConfig()
    X, y = _check_xy(X, y)
    n, d = X.shape
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(d))
    if len(names) != d:
        raise ValueError("feature_names length mismatch")
    p_bar = y.mean()
    init = float(np.log(p_bar / (1.0 - p_bar)))
    XC = np.ascontiguousarray(X)
    XT = np.ascontiguousarray(X.T)
    order = presort(X)
    ones = np.ones(n)
    raw = np.full(n, init)
    trees: list[RegressionTree] = []
    for stage in range(config.n_trees):
        p = expit(raw)
        residual = y - p
        if callback is not None:
            callback(stage, raw.copy(), residual.copy())
        tree = grow_tree(XC, residual, hess=p * (1.0 - p), weight=ones, max_depth=config.max_depth,
                         min_leaf=config.min_leaf, order=order, XT=XT)
        trees.append(tree)
        raw += config.learning_rate * tree.predict(XC)
    return BoostedEnsemble(init, config.learning_rate, trees, names, config)
