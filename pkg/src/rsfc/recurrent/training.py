"""Mini-batch training with early stopping, and a classifier wrapper."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..dataset import split_stratified
from ..models.base import Classifier, as_x, as_xy, check_binary
from .cells import bce, init_params, loss_and_grads, predict_proba
from .optim import OPTIMIZERS, OptimizerState, optimizer_step

log = logging.getLogger(__name__)

STOP_RULES = ("patience", "nondecrease")


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, lr: float, loss: float):
        super().__init__(f"loss became non-finite ({loss}) at epoch {epoch} with lr={lr}")
        self.epoch = epoch
        self.lr = lr


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 0.01
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0
    stop_rule: str = "patience"
    min_delta: float = 0.0

    def __post_init__(self):
        if self.optimizer.lower() not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.stop_rule not in STOP_RULES:
            raise ValueError(f"stop_rule must be one of {STOP_RULES}")


class EarlyStopping:
    """Decide when to stop from a stream of monitored losses.

    ``patience``: stop once ``patience`` consecutive epochs fail to beat the
    best loss by more than ``min_delta``. ``nondecrease``: stop once three
    consecutive losses satisfy ``l[n] <= l[n+1] <= l[n+2]``.
    """

    def __init__(self, patience: int = 5, rule: str = "patience", min_delta: float = 0.0):
        self.patience = patience
        self.rule = rule
        self.min_delta = min_delta
        self.best = np.inf
        self.best_epoch = -1
        self.wait = 0
        self.history: list[float] = []

    def update(self, loss: float) -> bool:
        epoch = len(self.history)
        self.history.append(loss)
        if loss < self.best - self.min_delta:
            self.best, self.best_epoch, self.wait = loss, epoch, 0
        else:
            self.wait += 1
        if self.rule == "nondecrease":
            h = self.history
            return len(h) >= 3 and h[-3] <= h[-2] <= h[-1]
        return self.wait >= self.patience


@dataclass
class TrainResult:
    params: object
    train_loss: list[float]
    val_loss: list[float]
    stop_epoch: int
    best_epoch: int

    def trace_rows(self):
        for e, tl in enumerate(self.train_loss):
            yield e + 1, tl, self.val_loss[e] if self.val_loss else float("nan")


def _as_sequences(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[:, None, :] if x.ndim == 2 else x


def train(params, train_set, val_set=None, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit ``params`` on ``(x, y)`` pairs; ``x`` is ``(N, k)`` or ``(N, n, k)``.

    Validation loss is monitored when ``val_set`` is given, otherwise the
    training loss. The parameters of the best monitored epoch are returned.
    """
    x, y = train_set
    x, y = _as_sequences(x), np.asarray(y, dtype=float)
    if len(y) == 0:
        raise ValueError("training set is empty")
    xv = yv = None
    if val_set is not None:
        xv, yv = _as_sequences(val_set[0]), np.asarray(val_set[1], dtype=float)
        if len(yv) == 0:
            xv = yv = None
    params = params.copy()
    state = OptimizerState(cfg.optimizer)
    rng = np.random.default_rng(cfg.seed)
    stopper = EarlyStopping(cfg.patience, cfg.stop_rule, cfg.min_delta)
    stopper.best_params = params.copy()
    train_trace, val_trace = [], []
    # divergence is reported through TrainingDiverged, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        epoch = _run_epochs(params, x, y, xv, yv, cfg, state, rng, stopper,
                            train_trace, val_trace)
    log.debug("stopped at epoch %d, best epoch %d", epoch, stopper.best_epoch + 1)
    return TrainResult(stopper.best_params, train_trace, val_trace, epoch, stopper.best_epoch + 1)


def _run_epochs(params, x, y, xv, yv, cfg, state, rng, stopper, train_trace, val_trace):
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(y))
        for start in range(0, len(y), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, grads = loss_and_grads(params, x[idx], y[idx])
            optimizer_step(state, params, grads, cfg.learning_rate)
        train_loss = bce(predict_proba(params, x), y) if params.all_finite() else np.nan
        if not np.isfinite(train_loss):
            raise TrainingDiverged(epoch, cfg.learning_rate, train_loss)
        train_trace.append(train_loss)
        monitored = train_loss
        if xv is not None:
            monitored = bce(predict_proba(params, xv), yv)
            val_trace.append(monitored)
        improved = monitored < stopper.best - stopper.min_delta
        stop = stopper.update(monitored)
        if improved:
            stopper.best_params = params.copy()
        if stop:
            break
    return epoch


@dataclass
class RecurrentClassifier(Classifier):
    kind: str
    params: object
    result: TrainResult = field(repr=False, default=None)

    @property
    def n_features(self) -> int:
        return self.params.input_size

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(as_x(x), dtype=float)
        if x.ndim == 2:
            x = self._check_width(x)[:, None, :]
        return predict_proba(self.params, x)


def fit_recurrent(fm, kind: str = "gru", neurons: int = 10, cfg: TrainConfig = TrainConfig(),
                  val=None, val_fraction: float = 0.2, y=None) -> RecurrentClassifier:
    """Train a single-layer LSTM/GRU on time-step-1 sequences of the features.

    ``val`` is an explicit validation FeatureMatrix; otherwise a stratified
    ``val_fraction`` of the training rows is held out (0 monitors training loss).
    """
    x, labels = as_xy(fm, y)
    check_binary(labels)
    params = init_params(kind, x.shape[1], neurons, cfg.seed)
    if val is not None:
        xv, yv = as_xy(val)
        xt, yt = x, labels
    elif val_fraction > 0:
        plan = split_stratified(labels, (1 - val_fraction, 0.0, val_fraction), cfg.seed)
        xt, yt = x[plan.train_idx], labels[plan.train_idx]
        xv, yv = x[plan.test_idx], labels[plan.test_idx]
    else:
        xt, yt, xv, yv = x, labels, None, None
    result = train(params, (xt, yt), None if xv is None else (xv, yv), cfg)
    return RecurrentClassifier(kind, result.params, result)
