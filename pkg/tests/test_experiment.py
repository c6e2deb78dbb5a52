import csv
import json

import numpy as np
import pytest

from trollspread.features import NUMERIC, FeatureMatrix
from trollspread.learn.experiment import (
    cross_validate,
    evaluate_model,
    run_ladder,
    select_population,
    write_roc_csv,
)
from trollspread.learn.cv import stratified_kfold
from trollspread.learn.forest import ForestConfig
from trollspread.learn.gbdt import GBDTConfig

FAST = GBDTConfig(n_trees=20)


def _matrix(n=300, seed=0, missing=0.0):
    rng = np.random.default_rng(seed)
    names = ["followers_count", "word_count", "chars_per_tweet", "retweet_count", "political_ideology",
             "bot_score"]
    groups = ["metadata", "lexicon", "activity", "engagement", "other", "other"]
    X = rng.normal(size=(n, len(names)))
    y = (X[:, 4] + 0.5 * X[:, 0] + 0.5 * rng.normal(size=n) > 0.3).astype(int)
    if missing:
        X[rng.random(X.shape) < missing] = np.nan
    fm = FeatureMatrix([f"u{i}" for i in range(n)], names, X, [NUMERIC] * len(names), groups)
    return fm, y


def test_select_population_balanced():
    fm, y = _matrix()
    fm.values[:10, fm.names.index("bot_score")] = np.nan
    sub, ys = select_population(fm, y, "balanced", rng_seed=1)
    scored_pos = int(np.sum(y[10:] == 1))
    assert int(ys.sum()) == scored_pos
    assert len(ys) == 2 * scored_pos
    assert not np.isnan(sub.column("bot_score")).any()
    assert list(sub.user_ids) == sorted(sub.user_ids, key=lambda u: int(u[1:]))
    again, _ = select_population(fm, y, "balanced", rng_seed=1)
    assert again.user_ids == sub.user_ids
    small, ys2 = select_population(fm, y, "balanced", n_nonspreaders=7, rng_seed=1)
    assert int((ys2 == 0).sum()) == 7
    full, yf = select_population(fm, y, "full")
    assert full is fm and len(yf) == len(y)
    with pytest.raises(ValueError):
        select_population(fm, y, "everything")


def test_cross_validate_report():
    fm, y = _matrix()
    folds = stratified_kfold(y, 5, 0)
    rep = cross_validate(fm, y, folds, 5, config=FAST, model=5)
    assert len(rep.fold_auc) == 5
    assert rep.mean_auc == pytest.approx(np.mean(rep.fold_auc))
    assert rep.std_auc == pytest.approx(np.std(rep.fold_auc))
    assert rep.fold_auc[rep.best_fold] == max(rep.fold_auc)
    assert sum(rep.importance) == pytest.approx(1.0)
    assert rep.ranked_features()[0] == "political_ideology"
    assert sum(rep.confusion.values()) == len(y)
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["fold_roc"][0]["threshold"][0] is None
    assert d["config"]["folds"] == 5


def test_threads_do_not_change_results():
    fm, y = _matrix(missing=0.1)
    folds = stratified_kfold(y, 4, 2)
    a = cross_validate(fm, y, folds, 4, config=FAST, threads=1)
    b = cross_validate(fm, y, folds, 4, config=FAST, threads=4)
    assert a.to_dict() == b.to_dict()


def test_fold_imputation_differs_from_global():
    fm, y = _matrix(missing=0.2)
    folds = stratified_kfold(y, 4, 2)
    a = cross_validate(fm, y, folds, 4, config=FAST)
    b = cross_validate(fm, y, folds, 4, config=FAST, global_impute=True)
    assert a.config["global_impute"] is False and b.config["global_impute"] is True
    assert a.fold_auc != b.fold_auc


def test_input_matrix_not_mutated():
    fm, y = _matrix(missing=0.2)
    before = fm.values.copy()
    evaluate_model(fm, y, 5, k=3, config=FAST)
    np.testing.assert_array_equal(fm.values, before)


def test_dropmissing_drops_rows_per_model():
    fm, y = _matrix()
    fm.values[:40, fm.names.index("bot_score")] = np.nan
    r1 = evaluate_model(fm, y, 1, k=3, config=FAST, harness="dropmissing")
    r5 = evaluate_model(fm, y, 5, k=3, config=FAST, harness="dropmissing")
    assert r1.n_rows == 300 and r5.n_rows == 260


def test_ladder_on_synth(small_dataset, tmp_path):
    ds, _ = small_dataset
    fm, y = select_population(ds.matrix, ds.labels, "full")
    reports = run_ladder(fm, y, k=3, config=FAST)
    assert [r.model for r in reports] == [1, 2, 3, 4, 5]
    assert [len(r.feature_names) for r in reports] == sorted(len(r.feature_names) for r in reports)
    assert reports[-1].mean_auc > reports[0].mean_auc
    write_roc_csv(tmp_path / "roc.csv", reports)
    with open(tmp_path / "roc.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["model"] for r in rows} == {"1", "2", "3", "4", "5"}
    assert rows[0]["threshold"] == ""


def test_forest_classifier_runs():
    fm, y = _matrix()
    rep = evaluate_model(fm, y, 5, k=3, classifier="forest", config=ForestConfig(n_trees=20))
    assert rep.classifier == "forest" and rep.mean_auc > 0.7
