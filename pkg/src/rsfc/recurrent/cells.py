"""Single-layer LSTM and GRU cells with a sigmoid head and manual BPTT.

Shapes: ``k`` input features, ``d`` hidden units. Input weights are
``(d, k)``, recurrent weights ``(d, d)``, biases ``(d,)``. Batched inputs are
``(B, n, k)`` for ``B`` sequences of length ``n``; a single sequence may be
passed as ``(n, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from ..models.base import sigmoid

EPS_PROB = 1e-12


class ShapeError(ValueError):
    pass


class _Params:
    def names(self) -> list[str]:
        return [f.name for f in fields(self)]

    def arrays(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in self.names()}

    def copy(self):
        return replace(self, **{n: a.copy() for n, a in self.arrays().items()})

    def zeros_like(self):
        return replace(self, **{n: np.zeros_like(a) for n, a in self.arrays().items()})

    @property
    def hidden_size(self) -> int:
        return self.head_w.shape[0]

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays().values())

    def _check(self, input_names, recurrent_names, bias_names):
        d, k = getattr(self, input_names[0]).shape
        for n in input_names:
            if getattr(self, n).shape != (d, k):
                raise ShapeError(f"{n} must be ({d}, {k}), got {getattr(self, n).shape}")
        for n in recurrent_names:
            if getattr(self, n).shape != (d, d):
                raise ShapeError(f"{n} must be ({d}, {d}), got {getattr(self, n).shape}")
        for n in bias_names + ["head_w"]:
            if getattr(self, n).shape != (d,):
                raise ShapeError(f"{n} must be ({d},), got {getattr(self, n).shape}")
        if np.shape(self.head_b) != ():
            raise ShapeError("head_b must be a scalar")

    @property
    def input_size(self) -> int:
        return getattr(self, self.names()[0]).shape[1]


@dataclass
class LstmParams(_Params):
    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    W_hi: np.ndarray
    W_hf: np.ndarray
    W_ho: np.ndarray
    W_hc: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray

    def __post_init__(self):
        for n in self.names():
            setattr(self, n, np.asarray(getattr(self, n), dtype=float))
        self._check(["W_i", "W_f", "W_o", "W_c"], ["W_hi", "W_hf", "W_ho", "W_hc"],
                    ["b_i", "b_f", "b_o", "b_c"])


@dataclass
class GruParams(_Params):
    W_r: np.ndarray
    W_u: np.ndarray
    W_c: np.ndarray
    W_hr: np.ndarray
    W_hu: np.ndarray
    W_hc: np.ndarray  # acts on r_t * h_{t-1}
    b_r: np.ndarray
    b_u: np.ndarray
    b_c: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray

    def __post_init__(self):
        for n in self.names():
            setattr(self, n, np.asarray(getattr(self, n), dtype=float))
        self._check(["W_r", "W_u", "W_c"], ["W_hr", "W_hu", "W_hc"], ["b_r", "b_u", "b_c"])


def init_params(kind: str, k: int, d: int, seed: int = 0):
    """Uniform(+-1/sqrt(k)) input weights, Uniform(+-1/sqrt(d)) recurrent and
    head weights, zero biases."""
    rng = np.random.default_rng(seed)
    a_in, a_rec = 1.0 / np.sqrt(k), 1.0 / np.sqrt(d)
    if kind == "lstm":
        cls, gates = LstmParams, "ifoc"
    elif kind == "gru":
        cls, gates = GruParams, "ruc"
    else:
        raise ValueError(f"unknown recurrent kind {kind!r}")
    values = {}
    for g in gates:
        values[f"W_{g}"] = rng.uniform(-a_in, a_in, size=(d, k))
    for g in gates:
        values[f"W_h{g}"] = rng.uniform(-a_rec, a_rec, size=(d, d))
    for g in gates:
        values[f"b_{g}"] = np.zeros(d)
    values["head_w"] = rng.uniform(-a_rec, a_rec, size=d)
    values["head_b"] = np.array(0.0)
    return cls(**values)


def lstm_step(p: LstmParams, x_t, h_prev, c_prev):
    """One LSTM step; returns ``(h_t, c_t)``."""
    h, c, _ = _lstm_step_cached(p, np.asarray(x_t, float), np.asarray(h_prev, float),
                                np.asarray(c_prev, float))
    return h, c


def _lstm_step_cached(p, x, h_prev, c_prev):
    if x.shape[-1] != p.input_size:
        raise ShapeError(f"x_t has {x.shape[-1]} features, expected {p.input_size}")
    if h_prev.shape[-1] != p.hidden_size or c_prev.shape[-1] != p.hidden_size:
        raise ShapeError(f"hidden state must have {p.hidden_size} units")
    i = sigmoid(x @ p.W_i.T + h_prev @ p.W_hi.T + p.b_i)
    f = sigmoid(x @ p.W_f.T + h_prev @ p.W_hf.T + p.b_f)
    o = sigmoid(x @ p.W_o.T + h_prev @ p.W_ho.T + p.b_o)
    g = np.tanh(x @ p.W_c.T + h_prev @ p.W_hc.T + p.b_c)
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, tc)


def gru_step(p: GruParams, x_t, h_prev):
    """One GRU step; returns ``h_t``."""
    h, _ = _gru_step_cached(p, np.asarray(x_t, float), np.asarray(h_prev, float))
    return h


def _gru_step_cached(p, x, h_prev):
    if x.shape[-1] != p.input_size:
        raise ShapeError(f"x_t has {x.shape[-1]} features, expected {p.input_size}")
    if h_prev.shape[-1] != p.hidden_size:
        raise ShapeError(f"hidden state must have {p.hidden_size} units")
    r = sigmoid(x @ p.W_r.T + h_prev @ p.W_hr.T + p.b_r)
    u = sigmoid(x @ p.W_u.T + h_prev @ p.W_hu.T + p.b_u)
    rh = r * h_prev
    g = np.tanh(x @ p.W_c.T + rh @ p.W_hc.T + p.b_c)
    h = (1.0 - u) * h_prev + u * g
    return h, (x, h_prev, r, u, rh, g)


def _as_batch(sequence) -> tuple[np.ndarray, bool]:
    x = np.asarray(sequence, dtype=float)
    if x.ndim == 2:
        return x[None], True
    if x.ndim != 3:
        raise ShapeError(f"sequence must be (n, k) or (B, n, k), got shape {x.shape}")
    return x, False


def forward(params, sequence, h0=None, c0=None):
    """Fold the cell over the time axis.

    Returns ``(h_final, cache)``; ``cache`` holds per-step activations used by
    :func:`loss_and_grads`.
    """
    x, single = _as_batch(sequence)
    b, n, _ = x.shape
    if n == 0:
        raise ShapeError("sequence must contain at least one time step")
    d = params.hidden_size
    h = np.zeros((b, d)) if h0 is None else np.broadcast_to(np.asarray(h0, float), (b, d)).copy()
    steps = []
    if isinstance(params, LstmParams):
        c = np.zeros((b, d)) if c0 is None else np.broadcast_to(np.asarray(c0, float), (b, d)).copy()
        for t in range(n):
            h, c, cache = _lstm_step_cached(params, x[:, t], h, c)
            steps.append(cache)
    elif isinstance(params, GruParams):
        for t in range(n):
            h, cache = _gru_step_cached(params, x[:, t], h)
            steps.append(cache)
    else:
        raise TypeError(f"unsupported parameter type {type(params).__name__}")
    return (h[0] if single else h), steps


def predict_proba(params, x) -> np.ndarray:
    """Sigmoid-head probability for each sequence in a ``(B, n, k)`` batch."""
    h, _ = forward(params, x)
    return sigmoid(np.atleast_2d(h) @ params.head_w + params.head_b)


def bce(p, y) -> float:
    p = np.clip(p, EPS_PROB, 1 - EPS_PROB)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def loss_and_grads(params, x, y):
    """Mean binary cross-entropy of the head on ``h_final`` and its gradients.

    ``x`` is ``(B, n, k)`` (or ``(B, k)`` for length-1 sequences), ``y`` is
    ``(B,)`` in {0, 1}. Gradients come back as a parameter object of the
    same type.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[:, None, :]
    y = np.asarray(y, dtype=float)
    if x.shape[0] == 0:
        raise ShapeError("batch must be nonempty")
    h, steps = forward(params, x)
    z = h @ params.head_w + params.head_b
    p = sigmoid(z)
    loss = bce(p, y)

    grads = params.zeros_like()
    dz = (p - y) / x.shape[0]
    grads.head_w = h.T @ dz
    grads.head_b = np.array(dz.sum())
    dh = np.outer(dz, params.head_w)

    if isinstance(params, LstmParams):
        dc = np.zeros_like(dh)
        for xt, h_prev, c_prev, i, f, o, g, tc in reversed(steps):
            do = dh * tc
            dct = dc + dh * o * (1.0 - tc ** 2)
            a_i = dct * g * i * (1.0 - i)
            a_f = dct * c_prev * f * (1.0 - f)
            a_o = do * o * (1.0 - o)
            a_g = dct * i * (1.0 - g ** 2)
            dh = np.zeros_like(dh)
            for gate, a in zip("ifoc", (a_i, a_f, a_o, a_g)):
                getattr(grads, f"W_{gate}")[...] += a.T @ xt
                getattr(grads, f"W_h{gate}")[...] += a.T @ h_prev
                getattr(grads, f"b_{gate}")[...] += a.sum(axis=0)
                dh += a @ getattr(params, f"W_h{gate}")
            dc = dct * f
    else:
        for xt, h_prev, r, u, rh, g in reversed(steps):
            a_g = dh * u * (1.0 - g ** 2)
            a_u = dh * (g - h_prev) * u * (1.0 - u)
            drh = a_g @ params.W_hc
            a_r = drh * h_prev * r * (1.0 - r)
            grads.W_c += a_g.T @ xt
            grads.W_hc += a_g.T @ rh
            grads.b_c += a_g.sum(axis=0)
            grads.W_u += a_u.T @ xt
            grads.W_hu += a_u.T @ h_prev
            grads.b_u += a_u.sum(axis=0)
            grads.W_r += a_r.T @ xt
            grads.W_hr += a_r.T @ h_prev
            grads.b_r += a_r.sum(axis=0)
            dh = dh * (1.0 - u) + drh * r + a_u @ params.W_hu + a_r @ params.W_hr
    return loss, grads
