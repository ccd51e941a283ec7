"""Classification metrics, fold construction and replicate aggregation."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .connectivity import FeatureMatrix
from .dataset import split_stratified

log = logging.getLogger(__name__)

METRICS = ("accuracy", "sensitivity", "specificity", "auc")
STATS = ("min", "average", "max", "std")


class EvaluationError(RuntimeError):
    pass


def _binary_vector(y, name: str) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not set(np.unique(y).tolist()) <= {0, 1}:
        raise ValueError(f"{name} must contain only 0/1 labels")
    return y.astype(int)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(y_true, y_pred) -> ConfusionCounts:
    """Counts with label 1 as the positive class."""
    t = _binary_vector(y_true, "y_true")
    p = _binary_vector(y_pred, "y_pred")
    if len(t) != len(p):
        raise ValueError(f"length mismatch: {len(t)} labels vs {len(p)} predictions")
    return ConfusionCounts(
        tp=int(np.sum((t == 1) & (p == 1))),
        fp=int(np.sum((t == 0) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def accuracy(cc: ConfusionCounts) -> float | None:
    return (cc.tp + cc.tn) / cc.total if cc.total else None


def sensitivity(cc: ConfusionCounts) -> float | None:
    """True-positive rate, or None when there are no positives."""
    pos = cc.tp + cc.fn
    return cc.tp / pos if pos else None


def specificity(cc: ConfusionCounts) -> float | None:
    """True-negative rate, or None when there are no negatives."""
    neg = cc.tn + cc.fp
    return cc.tn / neg if neg else None


def roc_auc(y_true, scores) -> float:
    """Probability that a random positive outscores a random negative (ties count half).

    Computed from average ranks, which is the pair count in closed form.
    """
    y = _binary_vector(y_true, "y_true")
    s = np.asarray(scores, dtype=float)
    if s.shape != y.shape:
        raise ValueError("scores and labels must have the same length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    ranks = rankdata(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def stratified_kfold(labels, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split indices into ``k`` folds with per-class round-robin assignment.

    Each class is shuffled independently; its members are dealt to folds in
    turn, starting where the previous class stopped so that fold sizes stay
    within one of each other overall.
    """
    if hasattr(labels, "labels"):
        labels = labels.labels
    y = np.asarray(labels).astype(int)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(y), dtype=int)
    offset = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if len(idx) < k:
            raise ValueError(f"class {c} has {len(idx)} members, fewer than k={k}")
        idx = rng.permutation(idx)
        fold_of[idx] = (offset + np.arange(len(idx))) % k
        offset = (offset + len(idx)) % k
    everything = np.arange(len(y))
    return [(everything[fold_of != f], everything[fold_of == f]) for f in range(k)]


@dataclass(frozen=True)
class Summary:
    min: float
    average: float
    max: float
    std: float


def summarize(values, ddof: int = 1) -> Summary | None:
    """Percent-scale summary of fractional scores; ``None`` entries are skipped."""
    v = np.array([x for x in values if x is not None], dtype=float) * 100.0
    if len(v) == 0:
        return None
    std = float(np.std(v, ddof=ddof)) if len(v) > ddof else 0.0
    return Summary(float(v.min()), float(v.mean()), float(v.max()), std)


@dataclass
class MetricReport:
    """Min/average/max/std (percent) for each metric over evaluation items."""

    stats: dict[str, Summary | None]
    n_items: int
    protocol: str = ""
    ddof: int = 1
    header: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_scores(cls, scores: list[dict[str, float | None]], protocol: str = "",
                    ddof: int = 1, header=None) -> "MetricReport":
        stats = {m: summarize([s.get(m) for s in scores], ddof) for m in METRICS}
        return cls(stats, len(scores), protocol, ddof, dict(header or {}))

    def to_json(self) -> str:
        payload = {
            "header": self.header,
            "protocol": self.protocol,
            "n_items": self.n_items,
            "std_ddof": self.ddof,
            "metrics": {m: (None if s is None else {k: getattr(s, k) for k in STATS})
                        for m, s in self.stats.items()},
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        d = json.loads(text)
        stats = {m: (None if s is None else Summary(**s)) for m, s in d["metrics"].items()}
        return cls(stats, d["n_items"], d.get("protocol", ""), d.get("std_ddof", 1),
                   d.get("header", {}))

    def to_table(self, title: str = "score") -> str:
        """Rows Accuracy/Sensitivity/Specificity/AUC, each split into Min/Average/Max/Std."""
        lines = [f"{'Metric':<12} {'Statistic':<8} {title:>10}"]
        for m in METRICS:
            label = "AUC" if m == "auc" else m.capitalize()
            s = self.stats.get(m)
            for k in STATS:
                cell = "n/a" if s is None else f"{getattr(s, k):.2f}"
                name = "Average" if k == "average" else k.capitalize()
                lines.append(f"{label:<12} {name:<8} {cell:>10}")
                label = ""
        return "\n".join(lines) + "\n"


def _scores_of(model, x) -> np.ndarray:
    if hasattr(model, "decision_function"):
        return model.decision_function(x)
    return model.predict_proba(x)


def score_model(model, fm: FeatureMatrix) -> dict[str, float | None]:
    """Accuracy, sensitivity, specificity and AUC of ``model`` on ``fm``."""
    pred = model.predict(fm.values)
    cc = confusion(fm.labels, pred)
    y = fm.labels
    auc = roc_auc(y, _scores_of(model, fm.values)) if 0 < y.sum() < len(y) else None
    return {"accuracy": accuracy(cc), "sensitivity": sensitivity(cc),
            "specificity": specificity(cc), "auc": auc}


Fitter = Callable[[FeatureMatrix, int], object]


def _derived_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.default_rng(seed).integers(0, 2**31 - 1, size=n)]


def repeated_cv(fitter: Fitter, fm: FeatureMatrix, k: int = 10, repeats: int = 10,
                seed: int = 0, ddof: int = 1, header=None) -> MetricReport:
    """Repeated stratified k-fold; statistics pool every fold-by-repeat score.

    ``fitter(train_fm, seed)`` returns a fitted model. Each repeat draws its
    shuffling seed (also passed to the fitter) from ``seed``.
    """
    scores = []
    for r, rseed in enumerate(_derived_seeds(seed, repeats)):
        for f, (tr, ho) in enumerate(stratified_kfold(fm.labels, k, rseed)):
            try:
                model = fitter(fm.rows(tr), rseed)
                scores.append(score_model(model, fm.rows(ho)))
            except Exception as exc:
                raise EvaluationError(f"repeat {r}, fold {f}: {exc}") from exc
    return MetricReport.from_scores(scores, f"cv k={k} repeats={repeats}", ddof, header)


def repeated_split(fitter: Fitter, fm: FeatureMatrix, repeats: int = 10, seed: int = 0,
                   test_fraction: float = 0.2, resplit: bool = False, ddof: int = 1,
                   header=None) -> MetricReport:
    """Hold out a stratified ``test_fraction`` and refit ``repeats`` times with fresh seeds.

    The split is fixed by ``seed`` unless ``resplit`` draws a new one per replicate.
    """
    seeds = _derived_seeds(seed, repeats)
    plan = split_stratified(fm.labels, (1 - test_fraction, 0.0, test_fraction), seed)
    scores = []
    for r, rseed in enumerate(seeds):
        if resplit:
            plan = split_stratified(fm.labels, (1 - test_fraction, 0.0, test_fraction), rseed)
        try:
            model = fitter(fm.rows(plan.train_idx), rseed)
            scores.append(score_model(model, fm.rows(plan.test_idx)))
        except Exception as exc:
            raise EvaluationError(f"replicate {r}: {exc}") from exc
        log.debug("replicate %d: %s", r, scores[-1])
    proto = f"split test={test_fraction} repeats={repeats}" + (" resplit" if resplit else "")
    return MetricReport.from_scores(scores, proto, ddof, header)
