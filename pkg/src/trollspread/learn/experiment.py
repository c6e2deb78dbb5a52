"""Cross-validated evaluation of the spreader classifier and the five-model ladder."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..features import FeatureMatrix, fill_missing, imputation_values, select_model
from .cv import fold_indices, stratified_kfold
from .explain import feature_importance
from .forest import ForestConfig, fit_forest
from .gbdt import GBDTConfig, fit_gbdt
from .metrics import auc, confusion_counts, roc_curve

logger = logging.getLogger(__name__)

HARNESSES = ("balanced", "full", "dropmissing")
CLASSIFIERS = ("gbdt", "forest")


def fit_classifier(X, y, classifier: str = "gbdt", config=None, feature_names=None):
    if classifier == "gbdt":
        return fit_gbdt(X, y, config or GBDTConfig(), feature_names)
    if classifier == "forest":
        return fit_forest(X, y, config or ForestConfig(), feature_names)
    raise ValueError(f"unknown classifier {classifier!r}")


@dataclass
class EvaluationReport:
    model: Optional[int]
    classifier: str
    harness: str
    n_rows: int
    n_positive: int
    feature_names: list
    fold_auc: list
    fold_roc: list
    mean_auc: float
    std_auc: float
    best_fold: int
    importance: list
    best_fold_importance: list
    confusion: dict
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for roc in d["fold_roc"]:
            roc["threshold"] = [t if math.isfinite(t) else None for t in roc["threshold"]]
        return d

    def ranked_features(self) -> list:
        order = sorted(range(len(self.importance)), key=lambda j: (-self.importance[j], j))
        return [self.feature_names[j] for j in order]


def write_roc_csv(path, reports) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "fold", "fpr", "tpr", "threshold"])
        for rep in reports:
            for f, roc in enumerate(rep.fold_roc):
                for x, y, t in zip(roc["fpr"], roc["tpr"], roc["threshold"]):
                    w.writerow([rep.model, f, repr(x), repr(y), "" if not math.isfinite(t) else repr(t)])


def select_population(matrix: FeatureMatrix, labels, harness: str = "balanced", bot_scored=None,
                      n_nonspreaders: Optional[int] = None, rng_seed: int = 0):
    """Rows used for an experiment, as ``(matrix, y)``.

    ``balanced``: every spreader with a bot score plus a uniform sample of
    scored non-spreaders (default size: the number of scored spreaders).
    ``full`` and ``dropmissing`` keep every row; the latter drops rows with
    missing cells per model later.
    """
    y = np.asarray(labels).astype(np.int64)
    if harness not in HARNESSES:
        raise ValueError(f"unknown harness {harness!r}")
    if harness != "balanced":
        return matrix, y
    if bot_scored is None:
        scored = ~np.isnan(matrix.column("bot_score"))
    else:
        scored = np.array([u in bot_scored for u in matrix.user_ids])
    pos = np.flatnonzero(scored & (y == 1))
    neg = np.flatnonzero(scored & (y == 0))
    size = len(pos) if n_nonspreaders is None else int(n_nonspreaders)
    size = min(size, len(neg))
    rng = np.random.default_rng(rng_seed)
    picked = np.sort(rng.choice(neg, size=size, replace=False)) if size else neg[:0]
    rows = np.sort(np.concatenate([pos, picked]))
    return matrix.rows(rows), y[rows]


def _evaluate_fold(values, kinds, y, train, test, classifier, config, global_fills, names):
    if global_fills is None:
        fills, _ = imputation_values(values[train], kinds)
    else:
        fills = global_fills
    X_train = fill_missing(values[train], fills)
    X_test = fill_missing(values[test], fills)
    model = fit_classifier(X_train, y[train], classifier, config, names)
    scores = model.predict_proba(X_test)
    fpr, tpr, thr = roc_curve(scores, y[test])
    return {
        "auc": auc(scores, y[test]),
        "roc": {"fpr": fpr.tolist(), "tpr": tpr.tolist(), "threshold": thr.tolist()},
        "importance": feature_importance(model),
        "confusion": confusion_counts(scores, y[test]),
    }


def cross_validate(matrix: FeatureMatrix, y, folds: np.ndarray, k: int, classifier: str = "gbdt",
                   config=None, threads: int = 1, global_impute: bool = False,
                   model: Optional[int] = None, harness: str = "full") -> EvaluationReport:
    """Stratified k-fold evaluation; imputation statistics come from each training fold
    unless ``global_impute`` is set."""
    y = np.asarray(y).astype(np.int64)
    values = matrix.values
    global_fills = imputation_values(values, matrix.kinds)[0] if global_impute else None
    splits = list(fold_indices(folds, k))

    def run(split):
        _, train, test = split
        return _evaluate_fold(values, matrix.kinds, y, train, test, classifier, config, global_fills,
                              matrix.names)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, splits))
    else:
        results = [run(s) for s in splits]

    aucs = [r["auc"] for r in results]
    best = int(np.argmax(aucs))
    imp = np.mean([r["importance"] for r in results], axis=0)
    if imp.sum() > 0:
        imp = imp / imp.sum()
    confusion = {key: sum(r["confusion"][key] for r in results) for key in ("tp", "fp", "tn", "fn")}
    cfg = asdict(config) if config is not None else asdict(GBDTConfig() if classifier == "gbdt" else ForestConfig())
    cfg.update({"folds": k, "global_impute": global_impute})
    return EvaluationReport(
        model=model,
        classifier=classifier,
        harness=harness,
        n_rows=int(y.size),
        n_positive=int(y.sum()),
        feature_names=list(matrix.names),
        fold_auc=aucs,
        fold_roc=[r["roc"] for r in results],
        mean_auc=float(np.mean(aucs)),
        std_auc=float(np.std(aucs)),
        best_fold=best,
        importance=imp.tolist(),
        best_fold_importance=results[best]["importance"].tolist(),
        confusion=confusion,
        config=cfg,
    )


def evaluate_model(matrix: FeatureMatrix, y, model: int, k: int = 10, rng_seed: int = 0,
                   classifier: str = "gbdt", config=None, harness: str = "full", threads: int = 1,
                   global_impute: bool = False, folds: Optional[np.ndarray] = None) -> EvaluationReport:
    sub = select_model(matrix, model)
    y = np.asarray(y).astype(np.int64)
    if harness == "dropmissing":
        keep = ~np.isnan(sub.values).any(axis=1)
        sub = sub.rows(np.flatnonzero(keep))
        y = y[keep]
        folds = None
    if folds is None:
        folds = stratified_kfold(y, k, rng_seed)
    return cross_validate(sub, y, folds, k, classifier, config, threads, global_impute, model, harness)


def run_ladder(matrix: FeatureMatrix, labels, k: int = 10, rng_seed: int = 0, classifier: str = "gbdt",
               config=None, harness: str = "full", threads: int = 1, global_impute: bool = False,
               models=(1, 2, 3, 4, 5)) -> list[EvaluationReport]:
    """Evaluate models 1-5 on shared folds (per-model folds for ``dropmissing``).

    ``matrix``/``labels`` are the experiment population, e.g. from
    :func:`select_population`.
    """
    y = np.asarray(labels).astype(np.int64)
    shared = None if harness == "dropmissing" else stratified_kfold(y, k, rng_seed)
    reports = []
    for m in models:
        rep = evaluate_model(matrix, y, m, k, rng_seed, classifier, config, harness, threads,
                             global_impute, shared)
        logger.info("model %d: mean AUC %.4f over %d rows", m, rep.mean_auc, rep.n_rows)
        reports.append(rep)
    return reports
