"""Recursive feature elimination and coefficient-threshold selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..connectivity import FeatureMatrix
from .base import Classifier, ModelError, as_x
from .boosting import AdaBoostModel
from .forest import ForestModel
from .linear import LinearModel


def feature_importance(model) -> np.ndarray:
    """|weight| for linear models, impurity or stage-weight importance for ensembles."""
    if isinstance(model, LinearModel):
        return np.abs(model.weights)
    if isinstance(model, (ForestModel, AdaBoostModel)):
        return np.asarray(model.feature_importances)
    raise ModelError(f"{type(model).__name__} exposes no feature importance")


def rfe_select(fitter: Callable[[FeatureMatrix], Classifier], fm: FeatureMatrix,
               target_count: int | None = None, step: int = 1) -> list[int]:
    """Refit and drop the ``step`` least important features until ``target_count`` remain.

    ``target_count`` defaults to half the features. Ties in importance drop
    the earliest column first.
    """
    n_features = fm.shape[1]
    if target_count is None:
        target_count = n_features // 2
    if not 1 <= target_count < n_features:
        raise ModelError(f"target_count must lie in [1, {n_features - 1}], got {target_count}")
    if step < 1:
        raise ModelError("step must be >= 1")
    remaining = list(range(n_features))
    while len(remaining) > target_count:
        model = fitter(fm.columns(remaining))
        imp = feature_importance(model)
        n_drop = min(step, len(remaining) - target_count)
        drop = set(np.argsort(imp, kind="stable")[:n_drop].tolist())
        remaining = [c for pos, c in enumerate(remaining) if pos not in drop]
    return remaining


def select_from_model(model: LinearModel, fm=None, threshold="mean") -> list[int]:
    """Keep features whose |weight| reaches ``threshold`` (``"mean"`` or a number)."""
    imp = feature_importance(model)
    if fm is not None and as_x(fm).shape[1] != imp.shape[0]:
        raise ModelError(f"model has {imp.shape[0]} weights, data has {as_x(fm).shape[1]} columns")
    cut = imp.mean() if threshold == "mean" else float(threshold)
    # relative slack so equal weights survive a mean computed in floating point
    keep = np.flatnonzero(imp >= cut - 1e-12 * max(abs(cut), 1.0))
    if keep.size == 0:
        raise ModelError(f"no feature reaches threshold {cut:.4g}; lower the threshold")
    return keep.tolist()


@dataclass
class SubsetModel(Classifier):
    """A model fitted on a column subset, applied to full-width inputs."""

    columns: list[int]
    inner: Classifier
    n_features_in: int

    @property
    def n_features(self) -> int:
        return self.n_features_in

    def predict_proba(self, x) -> np.ndarray:
        x = self._check_width(as_x(x))
        return self.inner.predict_proba(x[:, self.columns])

    def predict(self, x, threshold: float = 0.5) -> np.ndarray:
        x = self._check_width(as_x(x))
        return self.inner.predict(x[:, self.columns], threshold)

    def decision_function(self, x) -> np.ndarray:
        x = self._check_width(as_x(x))
        return self.inner.decision_function(x[:, self.columns])
