"""Adam, Nadam and Adagrad updates over recurrent parameter objects."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPTIMIZERS = ("adam", "nadam", "adagrad")


@dataclass
class OptimizerState:
    name: str
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first: dict[str, np.ndarray] = field(default_factory=dict)
    second: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.name = self.name.lower()
        if self.name not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.name!r}; expected one of {OPTIMIZERS}")


def optimizer_step(state: OptimizerState, params, grads, lr: float):
    """Apply one update in place and return ``params``.

    Adam: bias-corrected first/second moments. Nadam (constant momentum
    schedule): the first moment is replaced by the Nesterov look-ahead
    ``beta1 * m / (1 - beta1^(t+1)) + (1 - beta1) * g / (1 - beta1^t)``.
    Adagrad: gradient scaled by the root of the accumulated squared
    gradients (starting at 0).
    """
    state.step += 1
    t = state.step
    b1, b2, eps = state.beta1, state.beta2, state.eps
    for name, g in grads.arrays().items():
        p = getattr(params, name)
        if state.name == "adagrad":
            acc = state.second.setdefault(name, np.zeros_like(p))
            acc += g * g
            update = g / (np.sqrt(acc) + eps)
        else:
            m = state.first.setdefault(name, np.zeros_like(p))
            v = state.second.setdefault(name, np.zeros_like(p))
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            if state.name == "nadam":
                m_hat = b1 * m / (1 - b1 ** (t + 1)) + (1 - b1) * g / (1 - b1 ** t)
            else:
                m_hat = m / (1 - b1 ** t)
            v_hat = v / (1 - b2 ** t)
            update = m_hat / (np.sqrt(v_hat) + eps)
        setattr(params, name, p - lr * update)
    return params
