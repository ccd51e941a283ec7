"""Discrete AdaBoost (SAMME, two classes) over decision stumps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .base import Classifier, ModelError, as_x, as_xy, check_binary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    polarity: int  # +1 predicts the positive class above the threshold

    def predict_sign(self, x: np.ndarray) -> np.ndarray:
        above = x[:, self.feature] > self.threshold
        return np.where(above, self.polarity, -self.polarity).astype(float)


@dataclass
class AdaBoostModel(Classifier):
    stumps: list[Stump]
    stage_weights: np.ndarray
    stage_errors: np.ndarray  # weighted error of each accepted stump
    n_estimators: int
    learning_rate: float
    n_features_in: int
    stop_reason: str = "n_estimators"
    feature_importances: np.ndarray = field(repr=False, default=None)

    @property
    def n_features(self) -> int:
        return self.n_features_in

    def decision_function(self, x) -> np.ndarray:
        """Stage-weighted vote normalized to [-1, 1]."""
        x = self._check_width(as_x(x))
        total = self.stage_weights.sum()
        score = sum(a * s.predict_sign(x) for a, s in zip(self.stage_weights, self.stumps))
        return score / total

    def staged_decision(self, x):
        x = self._check_width(as_x(x))
        score = np.zeros(x.shape[0])
        for a, s in zip(self.stage_weights, self.stumps):
            score = score + a * s.predict_sign(x)
            yield score.copy()

    def predict_proba(self, x) -> np.ndarray:
        return (1.0 + self.decision_function(x)) / 2.0


class _StumpSearch:
    """Exhaustive weighted stump search reusing one sort per feature."""

    def __init__(self, x: np.ndarray, s: np.ndarray):
        self.order = np.argsort(x, axis=0, kind="stable")
        self.xs = np.take_along_axis(x, self.order, axis=0)
        self.valid = self.xs[1:] > self.xs[:-1]
        self.pos = (s > 0)[self.order]
        if not self.valid.any():
            raise ModelError("every feature is constant; no stump can split the data")

    def best(self, w: np.ndarray) -> tuple[Stump, float]:
        ws = w[self.order]
        cum_pos = np.cumsum(np.where(self.pos, ws, 0.0), axis=0)[:-1]
        cum_neg = np.cumsum(np.where(self.pos, 0.0, ws), axis=0)[:-1]
        neg_total = np.where(self.pos, 0.0, ws).sum(axis=0)
        # polarity +1 labels the left side negative and the right side positive
        err_up = cum_pos + (neg_total - cum_neg)
        err_down = w.sum() - err_up
        err = np.stack([err_up, err_down], axis=-1)  # (N-1, F, 2)
        err = np.where(self.valid[..., None], err, np.inf)
        err = err.transpose(1, 0, 2)                  # feature, position, polarity
        flat = int(np.argmin(err))
        f, rest = divmod(flat, err.shape[1] * 2)
        row, pol = divmod(rest, 2)
        thr = 0.5 * (self.xs[row, f] + self.xs[row + 1, f])
        return Stump(int(f), float(thr), 1 if pol == 0 else -1), float(err[f, row, pol])


def fit_adaboost(fm, n_estimators: int = 50, learning_rate: float = 1.0, y=None) -> AdaBoostModel:
    """SAMME boosting with stage weight ``lr * log((1 - err) / err)``.

    Weights start uniform. A stump with zero weighted error is kept with
    stage weight 1 and ends training; one with error >= 0.5 ends training
    (or raises, if it is the first).
    """
    x, labels = as_xy(fm, y)
    check_binary(labels)
    if n_estimators < 1:
        raise ModelError("n_estimators must be >= 1")
    if learning_rate <= 0:
        raise ModelError("learning_rate must be positive")
    n, f = x.shape
    s = 2.0 * labels - 1.0
    search = _StumpSearch(x, s)
    w = np.full(n, 1.0 / n)
    stumps, alphas, errors = [], [], []
    reason = "n_estimators"
    for m in range(n_estimators):
        stump, err = search.best(w)
        err = err / w.sum()
        if err <= 1e-12:
            stumps.append(stump)
            alphas.append(1.0)
            errors.append(0.0)
            reason = "zero_error"
            break
        if err >= 0.5:
            if m == 0:
                raise ModelError(f"first weak learner has weighted error {err:.4f} >= 0.5")
            log.info("stopping at stage %d: weak learner error %.4f >= 0.5", m, err)
            reason = "weak_learner"
            break
        alpha = learning_rate * np.log((1.0 - err) / err)
        miss = stump.predict_sign(x) != s
        stumps.append(stump)
        alphas.append(alpha)
        errors.append(err)
        w = w * np.exp(alpha * miss)
        w = w / w.sum()
    alphas = np.array(alphas)
    imp = np.zeros(f)
    for a, st in zip(alphas, stumps):
        imp[st.feature] += a
    imp = imp / imp.sum()
    return AdaBoostModel(stumps, alphas, np.array(errors), n_estimators, learning_rate, f,
                         reason, imp)
