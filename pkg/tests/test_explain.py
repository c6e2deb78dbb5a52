import numpy as np
import pytest

from trollspread.learn.explain import feature_importance, partial_dependence, write_pd_csv
from trollspread.learn.forest import ForestConfig, fit_forest
from trollspread.learn.gbdt import GBDTConfig, fit_gbdt


def _data(n=600, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    y = (X[:, 0] + 0.3 * rng.normal(size=n) > 0).astype(int)
    return X, y


@pytest.mark.parametrize("fit, cfg", [(fit_gbdt, GBDTConfig(n_trees=30)), (fit_forest, ForestConfig(n_trees=30))])
def test_importance_normalized_and_informative_first(fit, cfg):
    X, y = _data()
    imp = feature_importance(fit(X, y, cfg))
    assert imp.sum() == pytest.approx(1.0)
    assert np.all(imp >= 0)
    assert int(np.argmax(imp)) == 0


def test_importance_of_splitless_model_is_zero():
    X, y = _data()
    assert feature_importance(fit_gbdt(X, y, GBDTConfig(n_trees=0))).tolist() == [0, 0, 0, 0]


def test_pd_of_single_threshold_is_a_step():
    x = np.linspace(-1, 1, 200)
    X = np.column_stack([x, np.zeros(200)])
    y = (x > 0).astype(int)
    model = fit_gbdt(X, y, GBDTConfig(n_trees=5, max_depth=1))
    pd = partial_dependence(model, X, 0, n_grid=11)
    assert pd.levels.tolist() == pytest.approx(np.linspace(0, 1, 11).tolist())
    np.testing.assert_allclose(pd.grid, np.quantile(x, pd.levels))
    low = pd.values[pd.grid < 0]
    high = pd.values[pd.grid > 0]
    assert np.ptp(low) == 0 and np.ptp(high) == 0
    assert high[0] > low[0]


def test_pd_of_unused_feature_is_constant():
    X, y = _data()
    # three stumps on a strong signal all split on feature 0
    model = fit_gbdt(X, y, GBDTConfig(n_trees=3, max_depth=1))
    assert {int(t.feature[0]) for t in model.trees} == {0}
    for j in (1, 2, 3):
        pd = partial_dependence(model, X, j)
        assert np.ptp(pd.values) == 0.0
        assert pd.values[0] == pytest.approx(model.predict_proba(X).mean(), abs=1e-12)


def test_pd_constant_column_gives_one_point():
    X, y = _data()
    X[:, 2] = 1.5
    model = fit_gbdt(X, y, GBDTConfig(n_trees=5))
    pd = partial_dependence(model, X, 2)
    assert pd.constant and pd.grid.tolist() == [1.5] and len(pd.values) == 1


def test_pd_average_equals_mean_prediction_for_additive_model():
    # stumps make the decision function additive, so averaging the PD curve
    # over the empirical distribution reproduces the mean decision value
    X, y = _data(n=300)
    model = fit_gbdt(X, y, GBDTConfig(n_trees=20, max_depth=1))
    mean_raw = model.decision_function(X).mean()
    for j in range(4):
        pd = partial_dependence(model, X, j, grid=X[:, j], response="decision")
        assert pd.values.mean() == pytest.approx(mean_raw, abs=1e-10)


def test_pd_does_not_mutate_input_and_writes_csv(tmp_path):
    X, y = _data()
    before = X.copy()
    model = fit_gbdt(X, y, GBDTConfig(n_trees=5), feature_names=["a", "b", "c", "d"])
    pd = partial_dependence(model, X, 1, n_grid=5)
    np.testing.assert_array_equal(X, before)
    assert pd.feature == "b"
    write_pd_csv(tmp_path / "pd.csv", [pd])
    lines = (tmp_path / "pd.csv").read_text().splitlines()
    assert lines[0] == "feature,quantile,value,pd" and len(lines) == 6
    with pytest.raises(ValueError):
        partial_dependence(model, X, 1, response="logit")
