import numpy as np
import pytest

from rsfc.models import fit_kernel_svm, rbf_kernel
from rsfc.models.kernel_svm import default_gamma, dual_objective


def projected_gradient_oracle(kernel, s, c_reg, iters=50_000):
    """Maximize the SVM dual by gradient ascent, projecting onto the box and hyperplane.

    The projection onto {0 <= a <= C, s'a = 0} is found by bisection on the
    multiplier of the equality constraint.
    """
    q = (s[:, None] * s[None, :]) * kernel
    step = 1.0 / np.linalg.eigvalsh(q)[-1]
    a = np.zeros(len(s))

    def project(v):
        lo, hi = -1e3, 1e3
        while hi - lo > 1e-13:
            mu = 0.5 * (lo + hi)
            if s @ np.clip(v - mu * s, 0, c_reg) > 0:
                lo = mu
            else:
                hi = mu
        return np.clip(v - 0.5 * (lo + hi) * s, 0, c_reg)

    for _ in range(iters):
        nxt = project(a + step * (1 - q @ a))
        if np.max(np.abs(nxt - a)) < 1e-12:
            return nxt
        a = nxt
    return a


def test_smo_dual_matches_projected_gradient_oracle():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 3))
    y = (np.linalg.norm(x, axis=1) + rng.normal(scale=0.3, size=40) > 1.6).astype(int)
    m = fit_kernel_svm(x, 1.0, 0.5, y=y)
    k = rbf_kernel(x, x, 0.5)
    s = 2.0 * y - 1
    oracle = projected_gradient_oracle(k, s, 1.0)
    assert abs(dual_objective(m.alpha, k, s) - dual_objective(oracle, k, s)) < 1e-3


def test_dual_feasibility():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 4))
    y = rng.integers(0, 2, 50)
    m = fit_kernel_svm(x, 2.0, y=y)
    s = 2.0 * y - 1
    assert np.all(m.alpha >= 0) and np.all(m.alpha <= 2.0)
    assert abs(m.alpha @ s) < 1e-8
    assert np.all(np.abs(m.dual_coeffs) <= 2.0) and len(m.dual_coeffs) > 0


def test_xor_separable_with_rbf():
    x = np.array([[0, 0], [1, 1], [0, 1], [1, 0.0]])
    y = np.array([0, 0, 1, 1])
    m = fit_kernel_svm(x, 10.0, 1.0, y=y)
    assert np.all(m.predict(x) == y)


def test_two_points_boundary_midpoint():
    m = fit_kernel_svm(np.array([[-1.0], [1.0]]), 100.0, 0.5, y=np.array([0, 1]))
    assert abs(m.decision_function(np.array([[0.0]]))[0]) < 1e-9
    assert m.decision_function(np.array([[0.3]]))[0] > 0


def test_default_gamma():
    x = np.random.default_rng(2).normal(size=(10, 5))
    assert np.isclose(default_gamma(x), 1 / (5 * x.var()))


def test_proba_is_monotone_in_decision():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(30, 2))
    y = (x[:, 0] > 0).astype(int)
    m = fit_kernel_svm(x, y=y)
    d, p = m.decision_function(x), m.predict_proba(x)
    order = np.argsort(d)
    assert np.all(np.diff(p[order]) >= 0)
    assert np.array_equal(m.predict(x), (d >= 0).astype(int))
