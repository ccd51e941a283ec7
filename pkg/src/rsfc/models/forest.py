"""Depth-bounded decision trees and bootstrap random forests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import Classifier, ModelError, as_x, as_xy, check_binary

CRITERIA = ("gini", "entropy")


def gini(p):
    """Gini impurity of a binary node with positive fraction ``p``."""
    p = np.asarray(p, dtype=float)
    return 2.0 * p * (1.0 - p)


def entropy(p):
    """Binary entropy in bits."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(p < 1, (1 - p) * np.log2(1 - p), 0.0))
    return h


_IMPURITY = {"gini": gini, "entropy": entropy}


@dataclass
class DecisionTree:
    # parallel node arrays; leaves have feature == -1
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray        # P(label = 1) at the node
    depth: int
    importances: np.ndarray  # weighted impurity decrease per feature

    def apply(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=int)
        for _ in range(self.depth):
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            rows = np.flatnonzero(internal)
            go_left = x[rows, feat[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return node

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.value[self.apply(x)]


def _best_split(x, y, w, features, impurity):
    """Lowest weighted child impurity over ``features``; ``None`` if no split."""
    sub = x[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ws = w[order]
    wys = (w * y)[order]
    wl = np.cumsum(ws, axis=0)[:-1]
    pl = np.cumsum(wys, axis=0)[:-1]
    total_w = w.sum()
    total_p = (w * y).sum()
    wr = total_w - wl
    pr = total_p - pl
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = wl * impurity(pl / wl) + wr * impurity(pr / wr)
    cost = np.where(valid, cost, np.inf)
    flat = np.argmin(cost.T)  # feature-major: first feature, then first position
    f_pos, row = divmod(int(flat), cost.shape[0])
    threshold = 0.5 * (xs[row, f_pos] + xs[row + 1, f_pos])
    return features[f_pos], threshold, cost[row, f_pos]


def fit_tree(x, y, sample_weight=None, max_depth: int | None = 5, criterion: str = "gini",
             max_features: int | None = None, rng=None, min_weight: float = 0.0) -> DecisionTree:
    """Grow a binary tree by greedy impurity reduction.

    ``max_depth`` counts split levels: 1 is a stump, 0 a single leaf.
    Rows with zero weight are ignored (bootstrap counts are weights).
    ``max_features`` features are drawn without replacement at each node.
    """
    if criterion not in CRITERIA:
        raise ModelError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    impurity = _IMPURITY[criterion]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, f = x.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    keep = w > 0
    x, y, w = x[keep], y[keep], w[keep]
    rng = rng if rng is not None else np.random.default_rng(0)
    k = f if max_features is None else max(1, min(f, int(max_features)))
    limit = np.inf if max_depth is None else max_depth
    root_weight = w.sum()

    feature, threshold, left, right, value = [], [], [], [], []
    importances = np.zeros(f)
    reached = 0

    def grow(rows, depth):
        nonlocal reached
        reached = max(reached, depth)
        node = len(feature)
        wn = w[rows]
        total = wn.sum()
        p = float((wn * y[rows]).sum() / total)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(p)
        if depth >= limit or len(rows) < 2 or p in (0.0, 1.0):
            return node
        feats = np.arange(f) if k == f else np.sort(rng.choice(f, size=k, replace=False))
        split = _best_split(x[rows], y[rows], wn, feats, impurity)
        if split is None:
            return node
        feat, thr, cost = split
        go_left = x[rows, feat] <= thr
        importances[feat] += (total * impurity(p) - cost) / root_weight
        feature[node] = int(feat)
        threshold[node] = float(thr)
        left[node] = grow(rows[go_left], depth + 1)
        right[node] = grow(rows[~go_left], depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    return DecisionTree(np.array(feature), np.array(threshold), np.array(left),
                        np.array(right), np.array(value), reached, importances)


@dataclass
class ForestModel(Classifier):
    trees: list[DecisionTree]
    n_trees: int
    max_depth: int | None
    criterion: str
    seed: int
    n_features_in: int
    feature_importances: np.ndarray = field(repr=False, default=None)

    @property
    def n_features(self) -> int:
        return self.n_features_in

    def votes(self, x) -> np.ndarray:
        """Per-tree hard votes, shape (n_trees, N); a tied leaf casts half a vote."""
        x = self._check_width(as_x(x))
        probs = np.array([t.predict_proba(x) for t in self.trees])
        return np.where(probs > 0.5, 1.0, np.where(probs < 0.5, 0.0, 0.5))

    def predict_proba(self, x) -> np.ndarray:
        return self.votes(x).mean(axis=0)


def fit_random_forest(fm, n_trees: int = 100, max_depth: int | None = 5,
                      criterion: str = "gini", seed: int = 0, y=None,
                      max_features: int | str | None = "sqrt") -> ForestModel:
    """Bootstrap forest with ``floor(sqrt(F))`` candidate features per split."""
    x, labels = as_xy(fm, y)
    check_binary(labels)
    if n_trees < 1:
        raise ModelError("n_trees must be >= 1")
    if max_depth is not None and max_depth < 0:
        raise ModelError("max_depth must be non-negative")
    n, f = x.shape
    if max_features == "sqrt":
        max_features = max(1, int(np.sqrt(f)))
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)
        trees.append(fit_tree(x, labels, counts, max_depth, criterion, max_features, rng))
    imp = np.mean([t.importances for t in trees], axis=0)
    total = imp.sum()
    imp = imp / total if total > 0 else imp
    return ForestModel(trees, n_trees, max_depth, criterion, seed, f, imp)
