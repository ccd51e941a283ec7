"""Classical (non-recurrent) classifiers and feature selection wrappers."""

from .base import Classifier, ConvergenceWarning, ModelError, sigmoid
from .boosting import AdaBoostModel, Stump, fit_adaboost
from .forest import DecisionTree, ForestModel, entropy, fit_random_forest, fit_tree, gini
from .kernel_svm import KernelSvmModel, default_gamma, fit_kernel_svm, rbf_kernel
from .linear import LinearModel, fit_linear_svm, fit_logistic, logistic_objective
from .selection import SubsetModel, feature_importance, rfe_select, select_from_model


def predict_proba(model, fm):
    """P(label = 1) for each row of ``fm`` (FeatureMatrix or array)."""
    return model.predict_proba(fm.values if hasattr(fm, "values") else fm)


def predict(model, fm, threshold: float = 0.5):
    return model.predict(fm.values if hasattr(fm, "values") else fm, threshold)


__all__ = [
    "AdaBoostModel", "Classifier", "ConvergenceWarning", "DecisionTree", "ForestModel",
    "KernelSvmModel", "LinearModel", "ModelError", "Stump", "SubsetModel", "default_gamma",
    "entropy", "feature_importance", "fit_adaboost", "fit_kernel_svm", "fit_linear_svm",
    "fit_logistic", "fit_random_forest", "fit_tree", "gini", "logistic_objective", "predict",
    "predict_proba", "rbf_kernel", "rfe_select", "select_from_model", "sigmoid",
]
