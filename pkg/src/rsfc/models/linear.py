"""Penalized logistic regression and the linear hinge-loss SVM."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .base import Classifier, ConvergenceWarning, ModelError, as_x, as_xy, check_binary, sigmoid

PENALTIES = ("l1", "l2", "elasticnet")


@dataclass
class LinearModel(Classifier):
    weights: np.ndarray
    bias: float
    penalty: str = "l2"
    c_reg: float = 1.0
    loss: str = "logistic"
    l1_ratio: float = 0.5
    converged: bool = True
    grad_norm: float = 0.0
    n_iter: int = 0
    objective_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, x) -> np.ndarray:
        x = self._check_width(as_x(x))
        return x @ self.weights + self.bias

    def predict_proba(self, x) -> np.ndarray:
        # for the hinge loss this is a fixed logistic link on the margin
        return sigmoid(self.decision_function(x))

    def predict(self, x, threshold: float = 0.5) -> np.ndarray:
        if self.loss == "hinge" and threshold == 0.5:
            return (self.decision_function(x) >= 0).astype(int)
        return super().predict(x, threshold)


def _log1pexp(z):
    return np.logaddexp(0.0, z)


def logistic_objective(w, b, x, s, c_reg, penalty="l2", l1_ratio=0.5) -> float:
    """``C * sum log(1 + exp(-s * (xw + b))) + penalty(w)`` with ``s`` in {-1, +1}."""
    data = c_reg * np.sum(_log1pexp(-s * (x @ w + b)))
    if penalty == "l2":
        return data + 0.5 * w @ w
    if penalty == "l1":
        return data + np.abs(w).sum()
    return data + l1_ratio * np.abs(w).sum() + 0.5 * (1 - l1_ratio) * w @ w


def _data_grad(w, b, x, s, c_reg):
    margin = s * (x @ w + b)
    coef = -c_reg * s * sigmoid(-margin)
    return x.T @ coef, coef.sum(), margin


def _newton_cg(x, s, c_reg, tol, max_iter):
    """Newton iterations with CG inner solves and Armijo backtracking."""
    n, f = x.shape
    w = np.zeros(f)
    b = 0.0
    obj = logistic_objective(w, b, x, s, c_reg, "l2")
    trace = [obj]
    gnorm = np.inf
    for it in range(1, max_iter + 1):
        gw, gb, margin = _data_grad(w, b, x, s, c_reg)
        gw = gw + w
        g = np.append(gw, gb)
        gnorm = np.linalg.norm(g)
        if gnorm <= tol:
            return w, b, True, gnorm, it - 1, trace
        p = sigmoid(margin)
        d = c_reg * p * (1 - p)

        def hess(v):
            vw, vb = v[:f], v[f]
            xv = x @ vw + vb
            dxv = d * xv
            return np.append(x.T @ dxv + vw, dxv.sum())

        # conjugate gradient on H step = -g
        step = np.zeros(f + 1)
        r = -g.copy()
        direction = r.copy()
        rr = r @ r
        cg_tol = min(0.5, np.sqrt(gnorm)) * gnorm
        for _ in range(max(50, 2 * (f + 1))):
            hd = hess(direction)
            curv = direction @ hd
            if curv <= 0:
                break
            alpha = rr / curv
            step += alpha * direction
            r -= alpha * hd
            rr_new = r @ r
            if np.sqrt(rr_new) <= cg_tol:
                break
            direction = r + (rr_new / rr) * direction
            rr = rr_new
        if not np.any(step):
            step = -g
        t = 1.0
        slope = g @ step
        while True:
            w_new, b_new = w + t * step[:f], b + t * step[f]
            obj_new = logistic_objective(w_new, b_new, x, s, c_reg, "l2")
            if obj_new <= obj + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if obj_new > obj:
            # no descent possible at machine precision
            gw, gb, _ = _data_grad(w, b, x, s, c_reg)
            gnorm = np.linalg.norm(np.append(gw + w, gb))
            return w, b, gnorm <= tol, gnorm, it, trace
        w, b, obj = w_new, b_new, obj_new
        trace.append(obj)
    gw, gb, _ = _data_grad(w, b, x, s, c_reg)
    gnorm = np.linalg.norm(np.append(gw + w, gb))
    return w, b, gnorm <= tol, gnorm, max_iter, trace


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _proximal(x, s, c_reg, l1_ratio, tol, max_iter):
    """Monotone FISTA for the L1 / elastic-net penalized logistic loss.

    The smooth part is the data term plus the ridge share of the penalty;
    the L1 share is handled by soft-thresholding. The bias is unpenalized.
    """
    n, f = x.shape
    ridge = 1.0 - l1_ratio
    xa = np.hstack([x, np.ones((n, 1))])
    lipschitz = c_reg * np.linalg.norm(xa, 2) ** 2 / 4 + ridge
    step = 1.0 / lipschitz

    def smooth_grad(theta):
        gw, gb, _ = _data_grad(theta[:f], theta[f], x, s, c_reg)
        return np.append(gw + ridge * theta[:f], gb)

    def objective(theta):
        return logistic_objective(theta[:f], theta[f], x, s, c_reg, "elasticnet", l1_ratio)

    def prox(v):
        out = v.copy()
        out[:f] = _soft_threshold(v[:f], step * l1_ratio)
        return out

    theta = np.zeros(f + 1)
    yk = theta.copy()
    tk = 1.0
    obj = objective(theta)
    trace = [obj]
    gmap = np.inf
    for it in range(1, max_iter + 1):
        z = prox(yk - step * smooth_grad(yk))
        obj_z = objective(z)
        t_next = (1 + np.sqrt(1 + 4 * tk * tk)) / 2
        if obj_z <= obj:
            new = z
            obj_new = obj_z
        else:
            new = theta
            obj_new = obj
        yk = new + (tk / t_next) * (z - new) + ((tk - 1) / t_next) * (new - theta)
        theta, obj, tk = new, obj_new, t_next
        trace.append(obj)
        gmap = np.linalg.norm(theta - prox(theta - step * smooth_grad(theta))) / step
        if gmap <= tol:
            return theta[:f], theta[f], True, gmap, it, trace
    return theta[:f], theta[f], False, gmap, max_iter, trace


def fit_logistic(fm, penalty: str = "l2", c_reg: float = 1.0, l1_ratio: float = 0.5,
                 y=None, tol: float = 1e-6, max_iter: int | None = None) -> LinearModel:
    """Fit a penalized logistic regression.

    Minimizes ``C * sum_i log(1 + exp(-s_i (x_i w + b))) + P(w)`` where the
    penalty is ``||w||^2 / 2`` (l2), ``||w||_1`` (l1) or their
    ``l1_ratio``-weighted mix (elasticnet). Stops at gradient norm (or
    proximal gradient-mapping norm) ``tol``; failure to get there issues a
    :class:`ConvergenceWarning` and still returns the last iterate.
    """
    x, labels = as_xy(fm, y)
    check_binary(labels)
    if penalty not in PENALTIES:
        raise ModelError(f"unknown penalty {penalty!r}; expected one of {PENALTIES}")
    if c_reg <= 0:
        raise ModelError("c_reg must be positive")
    s = 2.0 * labels - 1.0
    if penalty == "l2":
        w, b, ok, gnorm, n_iter, trace = _newton_cg(x, s, c_reg, tol, max_iter or 200)
        l1_ratio_used = 0.0
    else:
        l1_ratio_used = 1.0 if penalty == "l1" else float(l1_ratio)
        if not 0.0 <= l1_ratio_used <= 1.0:
            raise ModelError("l1_ratio must lie in [0, 1]")
        w, b, ok, gnorm, n_iter, trace = _proximal(x, s, c_reg, l1_ratio_used, tol,
                                                   max_iter or 20000)
    if not ok:
        warnings.warn(f"logistic regression did not converge: gradient norm {gnorm:.3g} "
                      f"after {n_iter} iterations", ConvergenceWarning, stacklevel=2)
    return LinearModel(w, float(b), penalty, c_reg, "logistic",
                       l1_ratio_used if penalty == "elasticnet" else float(penalty == "l1"),
                       ok, float(gnorm), n_iter, trace)


def fit_linear_svm(fm, c_reg: float = 1.0, y=None, tol: float = 1e-4,
                   max_iter: int = 2000, seed: int = 0) -> LinearModel:
    """Hinge-loss linear SVM by dual coordinate descent.

    Solves ``min ||w||^2/2 + C sum max(0, 1 - s_i (x_i w + b))`` with the bias
    folded in as a constant feature (so it is regularized too). Epochs visit
    coordinates in a seeded random order; convergence is declared when the
    spread of projected gradients falls below ``tol``.
    """
    x, labels = as_xy(fm, y)
    check_binary(labels)
    if c_reg <= 0:
        raise ModelError("c_reg must be positive")
    n, f = x.shape
    s = 2.0 * labels - 1.0
    xa = np.hstack([x, np.ones((n, 1))])
    qd = np.einsum("ij,ij->i", xa, xa)
    alpha = np.zeros(n)
    w = np.zeros(f + 1)
    rng = np.random.default_rng(seed)
    gap = np.inf
    ok = False
    epoch = 0
    for epoch in range(1, max_iter + 1):
        pg_max, pg_min = -np.inf, np.inf
        for i in rng.permutation(n):
            g = s[i] * (xa[i] @ w) - 1.0
            if alpha[i] == 0:
                pg = min(g, 0.0)
            elif alpha[i] == c_reg:
                pg = max(g, 0.0)
            else:
                pg = g
            pg_max = max(pg_max, pg)
            pg_min = min(pg_min, pg)
            if pg != 0.0:
                old = alpha[i]
                alpha[i] = min(max(old - g / qd[i], 0.0), c_reg)
                w += (alpha[i] - old) * s[i] * xa[i]
        gap = pg_max - pg_min
        if gap <= tol:
            ok = True
            break
    if not ok:
        warnings.warn(f"linear SVM did not converge: projected-gradient gap {gap:.3g} "
                      f"after {epoch} epochs", ConvergenceWarning, stacklevel=2)
    return LinearModel(w[:f].copy(), float(w[f]), "l2", c_reg, "hinge", 0.0, ok,
                       float(gap), epoch)
