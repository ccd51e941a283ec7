from .cells import (GruParams, LstmParams, ShapeError, bce, forward, gru_step, init_params,
                    loss_and_grads, lstm_step, predict_proba)
from .optim import OPTIMIZERS, OptimizerState, optimizer_step
from .training import (EarlyStopping, RecurrentClassifier, TrainConfig, TrainingDiverged,
                       TrainResult, fit_recurrent, train)

__all__ = [
    "EarlyStopping", "GruParams", "LstmParams", "OPTIMIZERS", "OptimizerState",
    "RecurrentClassifier", "ShapeError", "TrainConfig", "TrainResult", "TrainingDiverged",
    "bce", "fit_recurrent", "forward", "gru_step", "init_params", "loss_and_grads",
    "lstm_step", "optimizer_step", "predict_proba", "train",
]
