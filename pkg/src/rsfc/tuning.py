"""Exhaustive hyperparameter search for the recurrent and classical models."""

from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from .connectivity import FeatureMatrix
from .evaluation import _derived_seeds, accuracy, confusion, stratified_kfold
from .recurrent import TrainConfig, TrainingDiverged, fit_recurrent

log = logging.getLogger(__name__)

DEFAULT_OPTIMIZERS = ("adam", "nadam", "adagrad")
DEFAULT_LEARNING_RATES = (0.01, 0.005, 0.001, 0.0005, 0.0001)
DEFAULT_BATCH_SIZES = (4, 8, 16, 32)
DEFAULT_NEURONS = (10, 30, 50, 100, 150, 200, 250)


@dataclass(frozen=True)
class HyperGrid:
    optimizers: tuple = DEFAULT_OPTIMIZERS
    learning_rates: tuple = DEFAULT_LEARNING_RATES
    batch_sizes: tuple = DEFAULT_BATCH_SIZES
    neurons: tuple = DEFAULT_NEURONS
    replicates: int = 3

    def __post_init__(self):
        for name in ("optimizers", "learning_rates", "batch_sizes", "neurons"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "optimizers", tuple(o.lower() for o in self.optimizers))
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")

    def cells(self):
        """(optimizer, lr, batch) in search order: optimizer outermost, batch innermost."""
        return list(itertools.product(self.optimizers, self.learning_rates, self.batch_sizes))


@dataclass
class TuningResult:
    cells: list[tuple[str, float, int, float]]
    best: tuple[str, float, int]
    best_score: float
    run_log: list[dict] = field(default_factory=list)

    def to_text(self, sep: str = ",") -> str:
        lines = [sep.join(["optimizer", "learning_rate", "batch_size", "val_accuracy", "best"])]
        for opt, lr, batch, score in self.cells:
            mark = "1" if (opt, lr, batch) == self.best else "0"
            lines.append(sep.join([opt, repr(lr), str(batch), f"{score:.6f}", mark]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, sep: str = ",") -> "TuningResult":
        rows = list(csv.DictReader(text.splitlines(), delimiter=sep))
        cells = [(r["optimizer"], float(r["learning_rate"]), int(r["batch_size"]),
                  float(r["val_accuracy"])) for r in rows]
        best = next(c for c, r in zip(cells, rows) if r["best"] == "1")
        return cls(cells, best[:3], best[3])


def _argmax_first(cells):
    best = None
    for cell in cells:
        if best is None or cell[-1] > best[-1]:
            best = cell
    return best


Evaluator = Callable[[str, float, int, int], float]


def recurrent_evaluator(kind: str, neurons: int, train_fm: FeatureMatrix, val_fm: FeatureMatrix,
                        max_epochs: int = 100, patience: int = 5,
                        stop_rule: str = "patience") -> Evaluator:
    """Validation accuracy of one early-stopped training run."""

    def evaluate(optimizer, lr, batch, seed):
        cfg = TrainConfig(optimizer, lr, batch, max_epochs, patience, seed, stop_rule)
        model = fit_recurrent(train_fm, kind, neurons, cfg, val=val_fm)
        return accuracy(confusion(val_fm.labels, model.predict(val_fm.values)))

    return evaluate


def grid_search(kind: str = "gru", neurons: int = 10, train_fm=None, val_fm=None,
                grid: HyperGrid = HyperGrid(), seed: int = 0,
                evaluator: Evaluator | None = None) -> TuningResult:
    """Average validation accuracy over replicates for every grid cell.

    Loops run optimizer, learning rate, batch size, then replicate. The
    winner is the first cell in that order with the highest average. A
    replicate whose training diverges scores 0 and the sweep continues.
    """
    if evaluator is None:
        if train_fm is None or val_fm is None:
            raise ValueError("train and validation sets are required without an evaluator")
        overlap = set(train_fm.subject_ids or ()) & set(val_fm.subject_ids or ())
        if overlap:
            raise ValueError(f"train and validation sets share subjects: {sorted(overlap)[:5]}")
        evaluator = recurrent_evaluator(kind, neurons, train_fm, val_fm)
    seeds = _derived_seeds(seed, grid.replicates)
    cells, run_log = [], []
    for opt, lr, batch in grid.cells():
        scores = []
        for rep, rseed in enumerate(seeds):
            entry = {"optimizer": opt, "learning_rate": lr, "batch_size": batch,
                     "replicate": rep, "seed": rseed}
            try:
                score = float(evaluator(opt, lr, batch, rseed))
            except TrainingDiverged as exc:
                log.warning("%s lr=%g batch=%d replicate %d diverged: %s", opt, lr, batch, rep, exc)
                score, entry["diagnostic"] = 0.0, str(exc)
            entry["score"] = score
            run_log.append(entry)
            scores.append(score)
        cells.append((opt, lr, batch, float(np.mean(scores))))
    best = _argmax_first(cells)
    return TuningResult(cells, best[:3], best[3], run_log)


def grid_search_classical(kind: str, fm: FeatureMatrix, param_grid: dict[str, list],
                          k: int = 10, seed: int = 0, make=None):
    """Mean k-fold accuracy for every combination in ``param_grid``.

    Returns ``(best_params, best_score, cells)`` where ``cells`` lists
    ``(params, score)`` in grid order and ties go to the earliest cell.
    """
    if make is None:
        from .registry import make_fitter as make
    names = list(param_grid)
    if any(len(param_grid[n]) == 0 for n in names):
        raise ValueError("every parameter list must be nonempty")
    folds = stratified_kfold(fm.labels, k, seed)
    cells = []
    for values in itertools.product(*(param_grid[n] for n in names)):
        params = dict(zip(names, values))
        fitter = make(kind, params)
        accs = []
        for tr, ho in folds:
            model = fitter(fm.rows(tr), seed)
            accs.append(accuracy(confusion(fm.labels[ho], model.predict(fm.values[ho]))))
        cells.append((params, float(np.mean(accs))))
    best = _argmax_first(cells)
    return best[0], best[1], cells


@dataclass
class ReferenceTable:
    """One reference tuning table: cells in grid order plus the marked cell."""

    model: str
    rsfc: str
    neurons: int
    cells: list[tuple[str, float, int, float]]
    marked: list[tuple[str, float, int]]

    def grid(self, replicates: int = 1) -> HyperGrid:
        uniq = lambda seq: tuple(dict.fromkeys(seq))
        return HyperGrid(uniq(c[0] for c in self.cells), uniq(c[1] for c in self.cells),
                         uniq(c[2] for c in self.cells), (self.neurons,), replicates)

    def lookup(self) -> dict[tuple[str, float, int], float]:
        return {c[:3]: c[3] for c in self.cells}

    def evaluator(self) -> Evaluator:
        table = self.lookup()
        return lambda opt, lr, batch, seed: table[(opt, lr, batch)]


def load_reference_tables(path=None) -> dict[tuple[str, str, int], ReferenceTable]:
    """Read the bundled tuning tables keyed by ``(model, rsfc, neurons)``."""
    if path is None:
        text = resources.files("rsfc").joinpath("data/tuning_reference.csv").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    tables: dict[tuple[str, str, int], ReferenceTable] = {}
    for row in csv.DictReader(text.splitlines()):
        key = (row["model"], row["rsfc"], int(row["neurons"]))
        table = tables.setdefault(key, ReferenceTable(*key, [], []))
        cell = (row["optimizer"].lower(), float(row["learning_rate"]), int(row["batch_size"]))
        table.cells.append(cell + (float(row["val_accuracy"]),))
        if row["marked"] in ("1", "True", "true"):
            table.marked.append(cell)
    return tables
