import numpy as np
import pytest

from rsfc.connectivity import FeatureMatrix
from rsfc.recurrent import TrainingDiverged
from rsfc.registry import make_fitter, resolve_params
from rsfc.tuning import (HyperGrid, TuningResult, grid_search, grid_search_classical,
                         load_reference_tables)


def first_max(cells):
    """Highest score, earliest cell on ties, by a plain scan in reverse."""
    best = None
    for cell in reversed(cells):
        if best is None or cell[3] >= best[3]:
            best = cell
    return best


def _fm(x, y, prefix="s"):
    return FeatureMatrix(x, y, [f"f{i}" for i in range(x.shape[1])], "test",
                         [f"{prefix}{i}" for i in range(len(y))])


def test_grid_order_optimizer_outermost():
    g = HyperGrid(("Adam", "nadam"), (0.1, 0.01), (4, 8), (10,))
    assert g.cells()[:3] == [("adam", 0.1, 4), ("adam", 0.1, 8), ("adam", 0.01, 4)]
    assert len(g.cells()) == 8


def test_grid_rejects_empty_axis():
    with pytest.raises(ValueError):
        HyperGrid((), (0.1,), (4,), (10,))


def test_single_cell_grid():
    r = grid_search(grid=HyperGrid(("adam",), (0.01,), (32,), (10,), 2),
                    evaluator=lambda o, lr, b, s: 0.7)
    assert r.best == ("adam", 0.01, 32) and r.best_score == 0.7 and len(r.run_log) == 2


def test_ties_go_to_first_cell_in_order():
    r = grid_search(grid=HyperGrid(("adam", "nadam"), (0.1, 0.01), (4,), (10,), 1),
                    evaluator=lambda o, lr, b, s: 0.5)
    assert r.best == ("adam", 0.1, 4)


def test_scores_average_over_replicates_and_log_every_run():
    calls = []

    def ev(opt, lr, batch, seed):
        calls.append(seed)
        return 0.6 if opt == "adam" else 0.4 + 0.1 * (len(calls) % 3)

    grid = HyperGrid(("adam", "adagrad"), (0.01, 0.001), (4, 8), (10,), 3)
    r = grid_search(grid=grid, seed=5, evaluator=ev)
    assert len(r.run_log) == 8 * 3 == len(calls)
    assert len(set(calls)) == 3
    assert all(abs(c[3] - 0.6) < 1e-12 for c in r.cells[:4])


def test_diverged_replicate_scores_zero():
    def ev(opt, lr, batch, seed):
        if lr == 0.1:
            raise TrainingDiverged(2, lr, float("nan"))
        return 0.55

    r = grid_search(grid=HyperGrid(("adam",), (0.1, 0.01), (4,), (10,), 2), evaluator=ev)
    assert r.cells[0][3] == 0.0 and r.best == ("adam", 0.01, 4)
    assert "epoch 2" in r.run_log[0]["diagnostic"]


def test_overlapping_subjects_rejected():
    x = np.zeros((4, 2))
    fm = _fm(x, np.array([0, 1, 0, 1]))
    with pytest.raises(ValueError, match="share subjects"):
        grid_search(train_fm=fm, val_fm=fm, grid=HyperGrid(("adam",), (0.01,), (4,), (10,), 1))


def test_result_text_round_trip():
    r = TuningResult([("adam", 0.01, 4, 0.5), ("adam", 0.001, 4, 0.625)], ("adam", 0.001, 4), 0.625)
    back = TuningResult.from_text(r.to_text())
    assert back.cells == r.cells and back.best == r.best and back.best_score == 0.625


def test_first_table_selects_reference_cell():
    t = load_reference_tables()[("lstm", "pearson", 10)]
    r = grid_search(grid=t.grid(), evaluator=t.evaluator())
    assert r.best == ("adam", 0.01, 32) and r.best_score == 0.6163
    assert len(r.cells) == 60


@pytest.mark.parametrize("key", sorted(load_reference_tables()))
def test_every_table_argmax_matches_scan(key):
    t = load_reference_tables()[key]
    r = grid_search(grid=t.grid(), evaluator=t.evaluator())
    assert r.best == first_max(t.cells)[:3]


def test_small_recurrent_search_runs_end_to_end():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(60, 3))
    y = (x[:, 0] > 0).astype(int)
    tr, va = _fm(x[:40], y[:40], "a"), _fm(x[40:], y[40:], "b")
    grid = HyperGrid(("adam",), (0.05, 0.01), (8,), (4,), 1)
    r = grid_search("gru", 4, tr, va, grid, seed=1)
    assert r.best_score >= 0.8 and len(r.cells) == 2


def test_classical_search_prefers_depth_for_interaction():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(200, 2))
    y = ((x[:, 0] > 0) ^ (x[:, 1] > 0)).astype(int)
    best, score, cells = grid_search_classical(
        "rfc", _fm(x, y), {"max_depth": [1, 5], "n_trees": [15]}, k=5, seed=0)
    assert best["max_depth"] == 5 and score > 0.85
    assert cells[0][1] < 0.7


def test_classical_search_with_custom_factory():
    x = np.zeros((20, 1))
    y = np.arange(20) % 2
    seen = []

    def make(kind, params):
        seen.append(params)
        return make_fitter("lr", {"c_reg": params["c"]})

    grid_search_classical("lr", _fm(x, y), {"c": [0.1, 1.0]}, k=2, make=make)
    assert seen == [{"c": 0.1}, {"c": 1.0}]


def test_resolve_params_rejects_unknown():
    assert resolve_params("rfc", {"max_depth": "3"})["max_depth"] == 3
    with pytest.raises(ValueError, match="no parameter"):
        resolve_params("lr", {"depth": 1})
