import numpy as np
import pytest

from rsfc.connectivity import FeatureMatrix
from rsfc.models import (LinearModel, ModelError, SubsetModel, fit_logistic, fit_random_forest,
                         rfe_select, select_from_model)


def _fm(x, y):
    return FeatureMatrix(x, y, [f"f{i}" for i in range(x.shape[1])], "test")


def test_sfm_mean_threshold_example():
    m = LinearModel(np.array([3.0, 0.1, 2.9]), 0.0)
    assert select_from_model(m) == [0, 2]


def test_sfm_equal_weights_keep_all():
    m = LinearModel(np.full(5, 0.3), 0.0)
    assert select_from_model(m) == [0, 1, 2, 3, 4]


def test_sfm_empty_selection_errors():
    with pytest.raises(ModelError, match="lower the threshold"):
        select_from_model(LinearModel(np.array([1.0, 2.0]), 0.0), threshold=5.0)


def test_sfm_recovers_planted_features():
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(200, 10))
        y = (x[:, 1] - x[:, 6] + 0.3 * rng.normal(size=200) > 0).astype(int)
        sel = select_from_model(fit_logistic(_fm(x, y)))
        hits += {1, 6} <= set(sel)
    assert hits / 20 >= 0.9


def test_rfe_drops_noise_feature():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(300, 3))
    y = (x[:, 0] + x[:, 1] > 0).astype(int)
    assert rfe_select(fit_logistic, _fm(x, y), 2) == [0, 1]


def test_rfe_refit_count_and_single_step():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(100, 4))
    y = (x[:, 0] > 0).astype(int)
    calls = []

    def counting(fm):
        calls.append(fm.shape[1])
        return fit_logistic(fm)

    assert len(rfe_select(counting, _fm(x, y), 2)) == 2
    assert calls == [4, 3]
    full = np.abs(fit_logistic(_fm(x, y)).weights)
    kept = rfe_select(fit_logistic, _fm(x, y), 3)
    assert int(np.argmin(full)) not in kept


def test_rfe_default_half_with_forest():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(100, 7))
    y = (x[:, 3] > 0).astype(int)
    kept = rfe_select(lambda fm: fit_random_forest(fm, n_trees=10), _fm(x, y))
    assert len(kept) == 3 and 3 in kept


def test_rfe_bad_target():
    x = np.random.default_rng(3).normal(size=(20, 3))
    with pytest.raises(ModelError):
        rfe_select(fit_logistic, _fm(x, np.arange(20) % 2), 3)


def test_subset_model_applies_columns():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(50, 5))
    y = (x[:, 4] > 0).astype(int)
    inner = fit_logistic(_fm(x[:, [1, 4]], y))
    m = SubsetModel([1, 4], inner, 5)
    assert np.array_equal(m.predict_proba(x), inner.predict_proba(x[:, [1, 4]]))
    with pytest.raises(ModelError):
        m.predict(x[:, :4])
