from __future__ import annotations

import numpy as np

from ..connectivity import FeatureMatrix


class ConvergenceWarning(UserWarning):
    pass


class ModelError(ValueError):
    pass


def as_xy(fm, y=None) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(fm, FeatureMatrix):
        return fm.values, fm.labels
    x = np.asarray(fm, dtype=float)
    if y is None:
        raise ModelError("labels are required when passing a bare array")
    return x, np.asarray(y, dtype=int)


def as_x(fm) -> np.ndarray:
    return fm.values if isinstance(fm, FeatureMatrix) else np.asarray(fm, dtype=float)


def check_binary(y: np.ndarray) -> None:
    values = set(np.unique(y).tolist())
    if not values <= {0, 1}:
        raise ModelError(f"labels must be 0/1, got {sorted(values)}")
    if len(values) < 2:
        raise ModelError("both classes must be present to fit a classifier")


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Classifier:
    """Prediction surface shared by every fitted model.

    Subclasses provide ``n_features`` and ``predict_proba``; models whose
    natural output is a margin also provide ``decision_function``.
    """

    n_features: int

    def _check_width(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.n_features:
            raise ModelError(f"model expects {self.n_features} features, got {x.shape[1]}")
        return x

    def predict_proba(self, x) -> np.ndarray:
        raise NotImplementedError

    def predict(self, x, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(x) >= threshold).astype(int)
