import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rsfc.connectivity import (ConnectivityError, FeatureMatrix, ShrinkageConfig,
                               build_feature_matrix, pair_names, partial_matrix, pearson_matrix,
                               spearman_matrix, unvectorize_upper, vectorize_upper)
from rsfc.dataset import generate_synthetic_cohort


def ranks_by_sorting(x):
    # tie-free ranks, 1-based
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        out[np.argsort(x[:, j]), j] = np.arange(1, x.shape[0] + 1)
    return out


def residual_partial(x, i, j):
    """Correlate the residuals of columns i and j after regressing out the rest."""
    others = [c for c in range(x.shape[1]) if c not in (i, j)]
    z = np.column_stack([np.ones(len(x)), x[:, others]])
    ri = x[:, i] - z @ np.linalg.lstsq(z, x[:, i], rcond=None)[0]
    rj = x[:, j] - z @ np.linalg.lstsq(z, x[:, j], rcond=None)[0]
    return np.corrcoef(ri, rj)[0, 1]


def test_pearson_matches_corrcoef():
    x = np.random.default_rng(0).normal(size=(30, 6))
    assert np.allclose(pearson_matrix(x).values, np.corrcoef(x.T), atol=1e-12)


def test_pearson_perfect_linear_relation():
    t = np.arange(10.0)
    cm = pearson_matrix(np.column_stack([t, 2 * t + 1, -t]))
    assert np.allclose(cm.values, [[1, 1, -1], [1, 1, -1], [-1, -1, 1]])


def test_spearman_equals_pearson_of_ranks():
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.normal(size=(rng.integers(5, 30), rng.integers(2, 7)))
        oracle = np.corrcoef(ranks_by_sorting(x).T)
        assert np.allclose(spearman_matrix(x).values, oracle, atol=1e-12)


def test_spearman_invariant_to_monotone_transform():
    x = np.random.default_rng(2).normal(size=(25, 4))
    assert np.allclose(spearman_matrix(x).values, spearman_matrix(np.exp(x) ** 3).values)


def test_spearman_with_ties_uses_average_ranks():
    from scipy.stats import spearmanr
    x = np.array([[1, 2], [1, 3], [2, 3], [3, 1], [4, 5.0]])
    assert np.isclose(spearman_matrix(x).values[0, 1], spearmanr(x[:, 0], x[:, 1])[0])


def test_partial_three_variables_against_two_oracles():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.normal(size=(50, 3)) @ rng.normal(size=(3, 3))
        pc = partial_matrix(x, ShrinkageConfig(0.0)).values
        r = np.corrcoef(x.T)
        recursive = (r[0, 1] - r[0, 2] * r[1, 2]) / np.sqrt((1 - r[0, 2] ** 2) * (1 - r[1, 2] ** 2))
        assert abs(pc[0, 1] - residual_partial(x, 0, 1)) < 1e-8
        assert abs(pc[0, 1] - recursive) < 1e-8


def test_partial_matches_residual_oracle_for_five_rois():
    x = np.random.default_rng(4).normal(size=(80, 5)) @ np.random.default_rng(5).normal(size=(5, 5))
    pc = partial_matrix(x, ShrinkageConfig(0.0)).values
    for i in range(5):
        for j in range(i + 1, 5):
            assert abs(pc[i, j] - residual_partial(x, i, j)) < 1e-8


def test_partial_with_full_shrinkage_is_zero_off_diagonal():
    x = np.random.default_rng(6).normal(size=(20, 4))
    pc = partial_matrix(x, ShrinkageConfig(1.0)).values
    assert np.allclose(pc, np.eye(4))


def test_partial_shrinkage_handles_more_rois_than_timepoints():
    x = np.random.default_rng(7).normal(size=(10, 30))
    pc = partial_matrix(x).values
    assert np.all(np.isfinite(pc)) and np.allclose(pc, pc.T)
    with pytest.raises(ConnectivityError, match="positive definite"):
        partial_matrix(x, ShrinkageConfig(0.0))


def test_shrinkage_config_range():
    with pytest.raises(ValueError):
        ShrinkageConfig(1.5)


def test_constant_column_rejected():
    x = np.random.default_rng(8).normal(size=(10, 3))
    x[:, 1] = 2.0
    with pytest.raises(ConnectivityError, match="column 1"):
        pearson_matrix(x)


@pytest.mark.parametrize("r", [2, 3, 7, 200])
def test_vectorize_length_and_order(r):
    m = np.arange(r * r, dtype=float).reshape(r, r)
    v = vectorize_upper(m)
    assert len(v) == r * (r - 1) // 2
    assert v[0] == m[0, 1] and v[-1] == m[r - 2, r - 1]
    assert len(pair_names(r)) == len(v)


def test_vectorize_cc200_width():
    assert len(vectorize_upper(np.eye(200))) == 19_900


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 45), elements=st.floats(-1, 1)).filter(
    lambda v: int(round((1 + np.sqrt(1 + 8 * len(v))) / 2)) * (int(round((1 + np.sqrt(1 + 8 * len(v))) / 2)) - 1) // 2 == len(v)))
def test_unvectorize_round_trip(v):
    m = unvectorize_upper(v)
    assert np.array_equal(vectorize_upper(m), v)
    assert np.array_equal(m, m.T)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["pearson", "spearman", "partial"]))
def test_connectivity_matrices_are_symmetric_and_bounded(seed, method):
    from rsfc.connectivity import connectivity_matrix
    x = np.random.default_rng(seed).normal(size=(15, 5))
    m = connectivity_matrix(x, method).values
    assert np.array_equal(m, m.T)
    assert np.all(np.abs(m) <= 1.0) and np.all(np.diag(m) == 1.0)


def test_build_feature_matrix_and_file_round_trip(tmp_path):
    cohort = generate_synthetic_cohort(3, 20, 5, 0.5, seed=0)
    fm = build_feature_matrix(cohort, "partial", 0.2)
    assert fm.shape == (6, 10) and fm.provenance == "raw-rsfc:partial"
    assert fm.feature_names[0] == "roi0-roi1"
    fm.save(tmp_path / "f.csv")
    back = FeatureMatrix.load(tmp_path / "f.csv")
    assert np.array_equal(back.values, fm.values)
    assert back.subject_ids == cohort.ids and back.provenance == fm.provenance
    assert np.array_equal(back.labels, fm.labels)
