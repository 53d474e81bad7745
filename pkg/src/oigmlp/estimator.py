"""Scikit-learn style estimators wrapping the two-stage trainers.

These give the trainers a fit/predict surface that composes with pipelines,
grid search, and cross_val_score.  All heavy lifting is delegated to the
library modules; the estimators only validate arrays, manage the optional
validation split and input normalization, and keep the fitted weights.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from . import network, trainers
from .data import RawTable, normalize
from .network import Dataset


class _TwoStageMlpBase(BaseEstimator):
    def __init__(self, algorithm="oig-hwo", n_hidden=8, n_iterations=100,
                 activation="sigmoid", seed=0, validation_fraction=0.0,
                 normalize_inputs=True, early_stop_patience=0):
        self.algorithm = algorithm
        self.n_hidden = n_hidden
        self.n_iterations = n_iterations
        self.activation = activation
        self.seed = seed
        self.validation_fraction = validation_fraction
        self.normalize_inputs = normalize_inputs
        self.early_stop_patience = early_stop_patience

    def _fit_arrays(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True)
        y2d = y if y.ndim == 2 else y[:, None]
        self.n_features_in_ = X.shape[1]
        table = RawTable(values=np.hstack([X, y2d]), n_in=X.shape[1],
                         n_out=y2d.shape[1])
        if self.normalize_inputs:
            table, self.norm_spec_ = normalize(table, "zscore")
        else:
            self.norm_spec_ = None
        train_table, val_table = self._split(table)
        config = trainers.TrainConfig(
            algorithm=self.algorithm, n_iterations=self.n_iterations,
            n_hidden=self.n_hidden, seed=self.seed,
            activation=self.activation,
            early_stop_patience=self.early_stop_patience)
        self.trace_ = trainers.train(config, train_table.to_dataset(),
                                     val_table.to_dataset())
        self.params_ = self.trace_.best.params
        return self

    def _split(self, table: RawTable):
        if not 0.0 <= self.validation_fraction < 0.5:
            raise ValueError("validation_fraction must be in [0, 0.5)")
        if self.validation_fraction == 0.0:
            return table, table
        n_val = max(1, int(round(self.validation_fraction * table.n_patterns)))
        order = np.random.default_rng(self.seed).permutation(table.n_patterns)
        return table.subset(order[n_val:]), table.subset(order[:n_val])

    def _raw_outputs(self, X) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit before predict")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, "
                             f"got {X.shape[1]}")
        if self.norm_spec_ is not None:
            X = self.norm_spec_.apply(X)
        data = Dataset.from_arrays(X, np.zeros((X.shape[0],
                                                self.params_.W_oi.shape[0])))
        return network.forward(self.params_, data).outputs


class TwoStageMlpRegressor(RegressorMixin, _TwoStageMlpBase):
    """Single-hidden-layer MLP regressor trained by a two-stage algorithm.

    Parameters mirror the training configuration; ``algorithm`` is one of
    'owo-bp', 'oig-bp', 'oig-hwo', 'scg', 'lm'.  Deterministic per seed.
    """

    def fit(self, X, y):
        self._y_was_1d_ = np.asarray(y).ndim == 1
        return self._fit_arrays(X, y)

    def predict(self, X):
        outputs = self._raw_outputs(X)
        return outputs.ravel() if self._y_was_1d_ else outputs


class TwoStageMlpClassifier(ClassifierMixin, _TwoStageMlpBase):
    """Classifier variant: targets are one-hot encoded internally and
    predictions take the argmax output (ties to the lowest class index)."""

    def fit(self, X, y):
        y = np.asarray(y)
        if y.ndim != 1:
            raise ValueError("classifier targets must be a 1-D label array")
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] < 2:
            raise ValueError("need at least 2 classes")
        onehot = (y[:, None] == self.classes_[None, :]).astype(np.float64)
        return self._fit_arrays(X, onehot)

    def decision_function(self, X):
        return self._raw_outputs(X)

    def predict(self, X):
        return self.classes_[np.argmax(self._raw_outputs(X), axis=1)]
