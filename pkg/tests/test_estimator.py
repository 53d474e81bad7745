"""Scikit-learn estimator surface."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from oigmlp import TwoStageMlpClassifier, TwoStageMlpRegressor
from oigmlp.data import synthesize_regression


def regression_arrays(seed=0, n=150):
    table = synthesize_regression("teacher", n, seed, n_inputs=4,
                                  teacher_hidden=4)
    return table.inputs, table.targets.ravel()


class TestRegressor:
    def test_fit_predict_scores_well(self):
        X, y = regression_arrays()
        est = TwoStageMlpRegressor(algorithm="oig-hwo", n_hidden=6,
                                   n_iterations=80, seed=0)
        est.fit(X, y)
        assert est.score(X, y) > 0.9
        assert est.predict(X).shape == y.shape

    def test_deterministic_per_seed(self):
        X, y = regression_arrays(3)
        a = TwoStageMlpRegressor(n_iterations=20, seed=7).fit(X, y).predict(X)
        b = TwoStageMlpRegressor(n_iterations=20, seed=7).fit(X, y).predict(X)
        assert np.array_equal(a, b)

    def test_multi_output(self):
        table = synthesize_regression("teacher", 100, 1, n_inputs=3,
                                      n_outputs=2, teacher_hidden=3)
        est = TwoStageMlpRegressor(n_iterations=20, n_hidden=4, seed=1)
        est.fit(table.inputs, table.targets)
        assert est.predict(table.inputs).shape == (100, 2)

    def test_clone_and_get_params(self):
        est = TwoStageMlpRegressor(algorithm="scg", n_hidden=3, seed=5)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
        assert cloned.get_params()["algorithm"] == "scg"

    def test_not_fitted_error(self):
        with pytest.raises(NotFittedError):
            TwoStageMlpRegressor().predict(np.zeros((2, 3)))

    def test_feature_count_checked(self):
        X, y = regression_arrays()
        est = TwoStageMlpRegressor(n_iterations=5, seed=0).fit(X, y)
        with pytest.raises(ValueError):
            est.predict(X[:, :2])

    def test_validation_fraction_split(self):
        X, y = regression_arrays(4)
        est = TwoStageMlpRegressor(n_iterations=30, seed=2,
                                   validation_fraction=0.2)
        est.fit(X, y)
        assert est.trace_.best is not None

    def test_composes_in_pipeline(self):
        X, y = regression_arrays(5)
        pipe = make_pipeline(StandardScaler(),
                             TwoStageMlpRegressor(n_iterations=20, seed=0,
                                                  normalize_inputs=False))
        pipe.fit(X, y)
        assert pipe.predict(X).shape == y.shape


class TestClassifier:
    def blobs(self, seed=0):
        rng = np.random.default_rng(seed)
        X0 = rng.standard_normal((60, 2)) + np.array([2.5, 0.0])
        X1 = rng.standard_normal((60, 2)) - np.array([2.5, 0.0])
        X = np.vstack([X0, X1])
        y = np.array([0] * 60 + [1] * 60)
        return X, y

    def test_fit_predict_accuracy(self):
        X, y = self.blobs()
        est = TwoStageMlpClassifier(algorithm="oig-hwo", n_hidden=4,
                                    n_iterations=40, seed=0)
        est.fit(X, y)
        assert est.score(X, y) > 0.95
        assert set(est.predict(X)) <= {0, 1}

    def test_classes_preserved(self):
        X, y = self.blobs(1)
        labels = np.where(y == 0, "neg", "pos")
        est = TwoStageMlpClassifier(n_iterations=15, seed=0).fit(X, labels)
        assert sorted(est.classes_) == ["neg", "pos"]
        assert est.predict(X[:3]).dtype == labels.dtype

    def test_decision_function_shape(self):
        X, y = self.blobs(2)
        est = TwoStageMlpClassifier(n_iterations=10, seed=0).fit(X, y)
        assert est.decision_function(X).shape == (120, 2)

    def test_single_class_rejected(self):
        X = np.zeros((5, 2))
        with pytest.raises(ValueError):
            TwoStageMlpClassifier().fit(X, np.zeros(5))
