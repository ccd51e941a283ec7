"""Name-to-fitter mapping used by evaluation, tuning and the command line."""

from __future__ import annotations

import warnings
from functools import partial

from .models import (ConvergenceWarning, SubsetModel, fit_adaboost, fit_kernel_svm,
                     fit_linear_svm, fit_logistic, fit_random_forest, rfe_select,
                     select_from_model)
from .recurrent import TrainConfig, fit_recurrent

CLASSICAL = ("lr", "lsvc", "ksvc", "rfc", "abc")
RECURRENT = ("lstm", "gru")
KINDS = CLASSICAL + RECURRENT

# parameter name -> type, per model kind; unknown names are rejected
PARAM_TYPES = {
    "lr": {"penalty": str, "c_reg": float, "l1_ratio": float},
    "lsvc": {"c_reg": float},
    "ksvc": {"c_reg": float, "gamma": float},
    "rfc": {"n_trees": int, "max_depth": int, "criterion": str},
    "abc": {"n_estimators": int, "learning_rate": float},
    "lstm": {"neurons": int, "optimizer": str, "learning_rate": float, "batch_size": int,
             "max_epochs": int, "patience": int, "stop_rule": str, "val_fraction": float},
}
PARAM_TYPES["gru"] = PARAM_TYPES["lstm"]

DEFAULTS = {
    "lr": {"penalty": "l2", "c_reg": 1.0, "l1_ratio": 0.5},
    "lsvc": {"c_reg": 1.0},
    "ksvc": {"c_reg": 1.0},
    "rfc": {"n_trees": 100, "max_depth": 5, "criterion": "gini"},
    "abc": {"n_estimators": 50, "learning_rate": 1.0},
    "lstm": {"neurons": 10, "optimizer": "adam", "learning_rate": 0.01, "batch_size": 32,
             "max_epochs": 100, "patience": 3, "stop_rule": "patience", "val_fraction": 0.2},
}
DEFAULTS["gru"] = DEFAULTS["lstm"]


def resolve_params(kind: str, params: dict | None = None) -> dict:
    """Defaults overlaid with ``params``, each value coerced to its declared type."""
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    types = PARAM_TYPES[kind]
    out = dict(DEFAULTS[kind])
    for name, value in (params or {}).items():
        if name not in types:
            raise ValueError(f"{kind} has no parameter {name!r}; known: {sorted(types)}")
        out[name] = types[name](value)
    return out


def _fit_one(kind: str, p: dict, fm, seed: int):
    if kind == "lr":
        return fit_logistic(fm, p["penalty"], p["c_reg"], p["l1_ratio"])
    if kind == "lsvc":
        return fit_linear_svm(fm, p["c_reg"], seed=seed)
    if kind == "ksvc":
        return fit_kernel_svm(fm, p["c_reg"], p.get("gamma"))
    if kind == "rfc":
        return fit_random_forest(fm, p["n_trees"], p["max_depth"], p["criterion"], seed=seed)
    if kind == "abc":
        return fit_adaboost(fm, p["n_estimators"], p["learning_rate"])
    cfg = TrainConfig(p["optimizer"], p["learning_rate"], p["batch_size"], p["max_epochs"],
                      p["patience"], seed, p["stop_rule"])
    return fit_recurrent(fm, kind, p["neurons"], cfg, val_fraction=p["val_fraction"])


def _fit(kind, p, rfe, sfm, quiet, fm, seed):
    with warnings.catch_warnings():
        if quiet:
            warnings.simplefilter("ignore", ConvergenceWarning)
        if sfm is not None:
            # coefficient threshold from a ridge logistic regression
            cols = select_from_model(fit_logistic(fm, "l2", DEFAULTS["lr"]["c_reg"]), fm, sfm)
            return SubsetModel(cols, _fit_one(kind, p, fm.columns(cols), seed), fm.shape[1])
        if rfe is not None:
            target = None if rfe == "half" else int(rfe)
            cols = rfe_select(lambda sub: _fit_one(kind, p, sub, seed), fm, target)
            return SubsetModel(cols, _fit_one(kind, p, fm.columns(cols), seed), fm.shape[1])
        return _fit_one(kind, p, fm, seed)


def make_fitter(kind: str, params: dict | None = None, rfe=None, sfm=None, quiet: bool = True):
    """Return ``fitter(train_fm, seed) -> model``.

    ``rfe`` ("half" or a target count) and ``sfm`` ("mean" or a number) wrap
    the model in a feature-selection step fitted on the same training rows.
    """
    if rfe is not None and sfm is not None:
        raise ValueError("choose at most one of rfe and sfm")
    if rfe is not None and kind in RECURRENT:
        raise ValueError("recursive elimination needs a model with feature importances")
    return partial(_fit, kind, resolve_params(kind, params), rfe, sfm, quiet)
