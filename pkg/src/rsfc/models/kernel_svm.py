"""RBF-kernel SVM trained with an SMO-type dual solver."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .base import Classifier, ConvergenceWarning, ModelError, as_x, as_xy, check_binary, sigmoid

TAU = 1e-12


def rbf_kernel(a, b, gamma: float) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def default_gamma(x: np.ndarray) -> float:
    """``1 / (F * Var(X))``; falls back to ``1 / F`` for constant data."""
    var = x.var()
    return 1.0 / (x.shape[1] * var) if var > 0 else 1.0 / x.shape[1]


@dataclass
class KernelSvmModel(Classifier):
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray   # alpha_i * s_i for each support vector
    bias: float
    gamma: float
    c_reg: float
    alpha: np.ndarray         # full dual vector over the training set
    converged: bool = True
    n_iter: int = 0
    kkt_gap: float = 0.0

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def decision_function(self, x) -> np.ndarray:
        x = self._check_width(as_x(x))
        return rbf_kernel(x, self.support_vectors, self.gamma) @ self.dual_coeffs + self.bias

    def predict_proba(self, x) -> np.ndarray:
        return sigmoid(self.decision_function(x))

    def predict(self, x, threshold: float = 0.5) -> np.ndarray:
        if threshold == 0.5:
            return (self.decision_function(x) >= 0).astype(int)
        return super().predict(x, threshold)


def dual_objective(alpha, kernel, s) -> float:
    """``sum(alpha) - alpha' Q alpha / 2`` with ``Q = (s s') * K``."""
    v = alpha * s
    return float(alpha.sum() - 0.5 * v @ kernel @ v)


def smo_solve(kernel: np.ndarray, s: np.ndarray, c_reg: float, tol: float = 1e-3,
              max_iter: int = 100_000):
    """Solve ``min a'Qa/2 - sum(a)`` s.t. ``0 <= a <= C``, ``s'a = 0``.

    Working pairs are chosen by maximal violation for the first index and
    second-order gain for the second. Returns ``(alpha, rho, converged,
    n_iter, gap)`` where the decision function is ``sum a_i s_i K(x_i, .) - rho``.
    """
    n = len(s)
    q_diag = np.diag(kernel).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)  # Q alpha - e
    gap = np.inf
    it = 0
    converged = False
    for it in range(max_iter):
        up = ((s > 0) & (alpha < c_reg)) | ((s < 0) & (alpha > 0))
        low = ((s < 0) & (alpha < c_reg)) | ((s > 0) & (alpha > 0))
        minus_sg = -s * grad
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(minus_sg[up])])
        g_max = minus_sg[i]
        g_max2 = np.max(-minus_sg[low])
        gap = g_max + g_max2
        if gap < tol:
            converged = True
            break
        cand = low & (minus_sg < g_max)
        diff = g_max - minus_sg[cand]
        quad = q_diag[i] + q_diag[cand] - 2.0 * kernel[i, cand]
        quad = np.where(quad > 0, quad, TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(diff ** 2) / quad)])

        q_i = s[i] * s * kernel[i]
        q_j = s[j] * s * kernel[j]
        old_i, old_j = alpha[i], alpha[j]
        if s[i] != s[j]:
            quad_ij = q_diag[i] + q_diag[j] + 2.0 * q_i[j]
            quad_ij = quad_ij if quad_ij > 0 else TAU
            delta = (-grad[i] - grad[j]) / quad_ij
            d = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if d > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = d
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -d
            if d > 0:
                if alpha[i] > c_reg:
                    alpha[i] = c_reg
                    alpha[j] = c_reg - d
            elif alpha[j] > c_reg:
                alpha[j] = c_reg
                alpha[i] = c_reg + d
        else:
            quad_ij = q_diag[i] + q_diag[j] - 2.0 * q_i[j]
            quad_ij = quad_ij if quad_ij > 0 else TAU
            delta = (grad[i] - grad[j]) / quad_ij
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c_reg:
                if alpha[i] > c_reg:
                    alpha[i] = c_reg
                    alpha[j] = total - c_reg
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > c_reg:
                if alpha[j] > c_reg:
                    alpha[j] = c_reg
                    alpha[i] = total - c_reg
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
        grad += q_i * (alpha[i] - old_i) + q_j * (alpha[j] - old_j)

    # rho: average over free vectors, else midpoint of the feasible interval
    sg = s * grad
    free = (alpha > 0) & (alpha < c_reg)
    if free.any():
        rho = float(sg[free].mean())
    else:
        ub, lb = np.inf, -np.inf
        for t in range(n):
            at_upper = alpha[t] >= c_reg
            if (at_upper and s[t] < 0) or (not at_upper and s[t] > 0):
                ub = min(ub, sg[t])
            else:
                lb = max(lb, sg[t])
        rho = float((ub + lb) / 2)
    return alpha, rho, converged, it, float(gap)


def fit_kernel_svm(fm, c_reg: float = 1.0, gamma: float | None = None, y=None,
                   tol: float = 1e-3, max_iter: int = 100_000) -> KernelSvmModel:
    x, labels = as_xy(fm, y)
    check_binary(labels)
    if c_reg <= 0:
        raise ModelError("c_reg must be positive")
    gamma = default_gamma(x) if gamma is None else float(gamma)
    if gamma <= 0:
        raise ModelError("gamma must be positive")
    s = 2.0 * labels - 1.0
    kernel = rbf_kernel(x, x, gamma)
    alpha, rho, ok, n_iter, gap = smo_solve(kernel, s, c_reg, tol, max_iter)
    if not ok:
        warnings.warn(f"SMO did not reach KKT tolerance {tol}: gap {gap:.3g} after "
                      f"{n_iter} iterations", ConvergenceWarning, stacklevel=2)
    sv = alpha > 0
    if not sv.any():
        raise ModelError("SMO produced an empty support set")
    return KernelSvmModel(x[sv].copy(), (alpha * s)[sv], -rho, gamma, c_reg, alpha,
                          ok, n_iter, gap)
