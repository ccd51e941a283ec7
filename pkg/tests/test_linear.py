import warnings

import numpy as np
import pytest
from scipy.optimize import minimize

from rsfc.models import ConvergenceWarning, LinearModel, ModelError, fit_linear_svm, fit_logistic
from rsfc.models.linear import logistic_objective


def _problem(seed, n=40, f=4):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, f))
    y = (x @ rng.normal(size=f) + rng.normal(scale=1.5, size=n) > 0).astype(int)
    return x, y


def gd_oracle(x, y, c_reg, iters=60_000):
    """Plain fixed-step gradient descent on the L2 objective."""
    s = 2.0 * y - 1
    xa = np.hstack([x, np.ones((len(x), 1))])
    step = 1.0 / (c_reg * np.linalg.norm(xa, 2) ** 2 / 4 + 1)
    theta = np.zeros(x.shape[1] + 1)
    for _ in range(iters):
        m = s * (xa @ theta)
        g = xa.T @ (-c_reg * s / (1 + np.exp(m)))
        g[:-1] += theta[:-1]
        theta -= step * g
    return logistic_objective(theta[:-1], theta[-1], x, s, c_reg)


def split_variable_oracle(x, y, c_reg, l1_ratio):
    """L1 via w = u - v with u, v >= 0, solved by bounded L-BFGS."""
    n, f = x.shape
    s = 2.0 * y - 1

    def fun(z):
        u, v, b = z[:f], z[f:2 * f], z[-1]
        w = u - v
        m = s * (x @ w + b)
        val = c_reg * np.logaddexp(0, -m).sum() + l1_ratio * (u + v).sum() \
            + 0.5 * (1 - l1_ratio) * w @ w
        coef = -c_reg * s / (1 + np.exp(m))
        gw = x.T @ coef + (1 - l1_ratio) * w
        return val, np.concatenate([gw + l1_ratio, -gw + l1_ratio, [coef.sum()]])

    bounds = [(0, None)] * (2 * f) + [(None, None)]
    res = minimize(fun, np.zeros(2 * f + 1), jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 20_000})
    return res.fun


def test_separable_1d_logistic():
    x = np.repeat([[-1.0], [1.0]], 50, axis=0)
    y = np.repeat([0, 1], 50)
    m = fit_logistic(x, y=y)
    assert m.weights[0] > 0 and np.all(m.predict(x) == y)


@pytest.mark.parametrize("seed", range(3))
def test_l2_matches_gradient_descent_oracle(seed):
    x, y = _problem(seed)
    m = fit_logistic(x, "l2", 1.0, y=y)
    s = 2.0 * y - 1
    ours = logistic_objective(m.weights, m.bias, x, s, 1.0)
    assert m.converged and m.grad_norm <= 1e-6
    assert abs(ours - gd_oracle(x, y, 1.0)) < 1e-5


@pytest.mark.parametrize("penalty,ratio", [("l1", 1.0), ("elasticnet", 0.5), ("elasticnet", 0.2)])
def test_proximal_matches_split_variable_oracle(penalty, ratio):
    x, y = _problem(10)
    m = fit_logistic(x, penalty, 0.5, l1_ratio=ratio, y=y)
    s = 2.0 * y - 1
    ours = logistic_objective(m.weights, m.bias, x, s, 0.5, "elasticnet", ratio)
    assert m.converged
    assert abs(ours - split_variable_oracle(x, y, 0.5, ratio)) < 1e-5


def test_strong_l1_zeroes_noise_weights():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(60, 5))
    y = rng.integers(0, 2, 60)
    m = fit_logistic(x, "l1", 1e-3, y=y)
    assert np.all(m.weights == 0.0)


def test_objective_trace_non_increasing():
    x, y = _problem(4)
    for penalty in ("l2", "l1", "elasticnet"):
        trace = np.array(fit_logistic(x, penalty, y=y).objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)


def test_zero_weights_predict_half():
    m = LinearModel(np.zeros(3), 0.0)
    assert np.allclose(m.predict_proba(np.ones((4, 3))), 0.5)


def test_non_convergence_warns_and_returns_model():
    x, y = _problem(5)
    with pytest.warns(ConvergenceWarning, match="gradient norm"):
        m = fit_logistic(x, "l1", y=y, max_iter=2)
    assert not m.converged


def test_logistic_input_errors():
    x, y = _problem(6)
    with pytest.raises(ModelError):
        fit_logistic(x, y=np.zeros(len(x), dtype=int))
    with pytest.raises(ModelError):
        fit_logistic(x, "l3", y=y)
    with pytest.raises(ModelError, match="expects 4"):
        fit_logistic(x, y=y).predict(x[:, :2])


def dual_oracle(x, y, c_reg):
    """Bias-augmented hinge dual solved by bounded L-BFGS; returns the primal optimum."""
    s = 2.0 * y - 1
    xa = np.hstack([x, np.ones((len(x), 1))])
    q = (s[:, None] * xa) @ (s[:, None] * xa).T
    res = minimize(lambda a: (0.5 * a @ q @ a - a.sum(), q @ a - 1), np.zeros(len(x)), jac=True,
                   method="L-BFGS-B", bounds=[(0, c_reg)] * len(x),
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 50_000})
    w = (res.x * s) @ xa
    return 0.5 * w @ w + c_reg * np.maximum(0, 1 - s * (xa @ w)).sum()


def test_linear_svm_two_points_boundary_at_origin():
    m = fit_linear_svm(np.array([[-1.0], [1.0]]), 100.0, y=np.array([0, 1]))
    assert abs(-m.bias / m.weights[0]) < 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_linear_svm_matches_dual_oracle(seed):
    x, y = _problem(seed + 20, n=30)
    m = fit_linear_svm(x, 1.0, y=y, tol=1e-8, max_iter=20_000)
    s = 2.0 * y - 1
    w = np.append(m.weights, m.bias)
    xa = np.hstack([x, np.ones((len(x), 1))])
    primal = 0.5 * w @ w + np.maximum(0, 1 - s * (xa @ w)).sum()
    assert abs(primal - dual_oracle(x, y, 1.0)) < 1e-4


def test_linear_svm_xor_at_most_three_quarters():
    x = np.array([[0, 0], [1, 1], [0, 1], [1, 0.0]])
    y = np.array([0, 0, 1, 1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        m = fit_linear_svm(x, 10.0, y=y)
    assert (m.predict(x) == y).mean() <= 0.75


def test_linear_svm_deterministic():
    x, y = _problem(7)
    a, b = fit_linear_svm(x, y=y, seed=3), fit_linear_svm(x, y=y, seed=3)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
