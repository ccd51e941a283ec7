import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsfc.dataset import (Cohort, CohortError, SubjectRecord, _allocate, generate_synthetic_cohort,
                          load_cohort, read_labels, save_cohort, split_stratified)


def _series(seed, t=10, r=4):
    return np.random.default_rng(seed).normal(size=(t, r))


def test_subject_record_rejects_constant_column():
    x = _series(0)
    x[:, 2] = 3.0
    with pytest.raises(CohortError, match="s1.*column 2"):
        SubjectRecord("s1", x, 1)


def test_subject_record_rejects_bad_label_and_nonfinite():
    with pytest.raises(CohortError, match="label"):
        SubjectRecord("s", _series(0), 2)
    x = _series(0)
    x[1, 1] = np.nan
    with pytest.raises(CohortError, match="non-finite"):
        SubjectRecord("s", x, 0)


def test_subject_series_is_read_only():
    rec = SubjectRecord("s", _series(0), 0)
    with pytest.raises(ValueError):
        rec.series[0, 0] = 1.0


def test_cohort_rejects_shape_mismatch_and_duplicates():
    a = SubjectRecord("a", _series(0), 0)
    b = SubjectRecord("b", _series(1, t=11), 1)
    with pytest.raises(CohortError, match="shape"):
        Cohort((a, b))
    with pytest.raises(CohortError, match="duplicate"):
        Cohort((a, SubjectRecord("a", _series(2), 1)))
    with pytest.raises(CohortError, match="both labels"):
        Cohort((a, SubjectRecord("c", _series(2), 0)))


def test_load_and_save_round_trip(tmp_path):
    cohort = generate_synthetic_cohort(3, 12, 5, 0.5, seed=1)
    save_cohort(cohort, tmp_path)
    back = load_cohort(tmp_path, tmp_path / "labels.csv")
    assert back.ids == cohort.ids
    assert np.array_equal(back.labels, cohort.labels)
    for s, t in zip(cohort.subjects, back.subjects):
        assert np.array_equal(s.series, t.series)


def test_load_cohort_tsv_and_missing_label(tmp_path):
    for sid in ("x1", "x2"):
        np.savetxt(tmp_path / f"{sid}.tsv", _series(hash(sid) % 100), delimiter="\t")
    (tmp_path / "labels.csv").write_text("id,label\nx1,1\n")
    with pytest.raises(CohortError, match="x2"):
        load_cohort(tmp_path, tmp_path / "labels.csv")
    (tmp_path / "labels.csv").write_text("id,label\nx1,1\nx2,0\n")
    assert load_cohort(tmp_path, tmp_path / "labels.csv").n_rois == 4


def test_read_labels_requires_header(tmp_path):
    p = tmp_path / "l.csv"
    p.write_text("a,1\nb,0\n")
    with pytest.raises(CohortError):
        read_labels(p)


def test_synthetic_is_deterministic_and_balanced():
    a = generate_synthetic_cohort(5, 20, 6, 0.8, seed=3)
    b = generate_synthetic_cohort(5, 20, 6, 0.8, seed=3)
    assert a.ids == b.ids
    assert all(np.array_equal(s.series, t.series) for s, t in zip(a.subjects, b.subjects))
    assert a.labels.sum() == 5 and len(a) == 10


def _class_mean_abs_corr(effect):
    cohort = generate_synthetic_cohort(40, 200, 8, effect, seed=0)
    iu = np.triu_indices(8, 1)
    mean_abs = np.array([np.mean(np.abs(np.corrcoef(s.series.T)[iu])) for s in cohort.subjects])
    return mean_abs[cohort.labels == 1].mean(), mean_abs[cohort.labels == 0].mean()


def test_synthetic_effect_raises_block_correlation():
    asd, control = _class_mean_abs_corr(1.0)
    assert asd > control + 0.05


def test_synthetic_zero_effect_matches_classes():
    asd, control = _class_mean_abs_corr(0.0)
    assert abs(asd - control) < 0.01


def test_synthetic_rejects_bad_sizes():
    with pytest.raises(CohortError):
        generate_synthetic_cohort(2, 2, 4, 0.5, 0)
    with pytest.raises(CohortError):
        generate_synthetic_cohort(2, 10, 4, 1.5, 0)


def test_split_fractions_and_disjointness():
    labels = np.array([0] * 30 + [1] * 20)
    plan = split_stratified(labels, (0.64, 0.16, 0.2), seed=4)
    parts = [plan.train_idx, plan.val_idx, plan.test_idx]
    assert sum(len(p) for p in parts) == 50
    assert len(set(np.concatenate(parts))) == 50
    assert [int(labels[p].sum()) for p in parts] == [13, 3, 4]


def test_split_errors():
    with pytest.raises(ValueError, match="sum to 1"):
        split_stratified([0, 1, 0, 1], (0.5, 0.2, 0.2))
    with pytest.raises(ValueError):
        split_stratified([0, 0, 0, 1], (0.6, 0.2, 0.2))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 200), st.lists(st.floats(0.01, 1.0), min_size=2, max_size=4))
def test_allocate_sums_and_is_close(n, weights):
    fractions = np.array(weights) / sum(weights)
    counts = _allocate(n, fractions)
    assert sum(counts) == n
    assert all(abs(c - f * n) < 1 + 1e-9 for c, f in zip(counts, fractions))


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 40), st.integers(5, 40), st.integers(0, 10_000))
def test_split_stratification_within_one(n0, n1, seed):
    labels = np.array([0] * n0 + [1] * n1)
    plan = split_stratified(labels, (0.6, 0.2, 0.2), seed)
    for idx, frac in ((plan.train_idx, 0.6), (plan.val_idx, 0.2), (plan.test_idx, 0.2)):
        for c, n in ((0, n0), (1, n1)):
            assert abs(np.sum(labels[idx] == c) - frac * n) <= 1 + 1e-9
