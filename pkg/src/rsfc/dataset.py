"""Subject cohorts: loading, validation, synthetic generation and splitting.

A subject is a ``T x R`` matrix of ROI time series (rows are time points)
with a binary diagnosis label, 1 for ASD and 0 for controls.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

SERIES_SUFFIXES = (".csv", ".tsv", ".txt")


class CohortError(ValueError):
    """Invalid subject data or cohort layout."""


@dataclass(frozen=True)
class SubjectRecord:
    id: str
    series: np.ndarray
    label: int

    def __post_init__(self):
        series = np.asarray(self.series, dtype=float)
        if series.ndim != 2:
            raise CohortError(f"subject {self.id}: series must be 2-D, got shape {series.shape}")
        t, r = series.shape
        if t < 3:
            raise CohortError(f"subject {self.id}: need at least 3 time points, got {t}")
        if r < 2:
            raise CohortError(f"subject {self.id}: need at least 2 ROIs, got {r}")
        if not np.all(np.isfinite(series)):
            row, col = np.argwhere(~np.isfinite(series))[0]
            raise CohortError(f"subject {self.id}: non-finite value at row {row}, column {col}")
        flat = np.flatnonzero(np.ptp(series, axis=0) == 0)
        if flat.size:
            raise CohortError(f"subject {self.id}: column {flat[0]} is constant (zero variance)")
        if self.label not in (0, 1):
            raise CohortError(f"subject {self.id}: label must be 0 or 1, got {self.label!r}")
        series.setflags(write=False)
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "label", int(self.label))

    @property
    def n_timepoints(self) -> int:
        return self.series.shape[0]

    @property
    def n_rois(self) -> int:
        return self.series.shape[1]


@dataclass(frozen=True)
class Cohort:
    subjects: tuple[SubjectRecord, ...]

    def __post_init__(self):
        subjects = tuple(self.subjects)
        object.__setattr__(self, "subjects", subjects)
        if len(subjects) < 2:
            raise CohortError("a cohort needs at least 2 subjects")
        ids = [s.id for s in subjects]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise CohortError(f"duplicate subject id {dup}")
        shape = subjects[0].series.shape
        for s in subjects[1:]:
            if s.series.shape != shape:
                raise CohortError(
                    f"subject {s.id}: shape {s.series.shape} differs from {shape} "
                    f"(subject {subjects[0].id})"
                )
        if len({s.label for s in subjects}) < 2:
            raise CohortError("both labels (0 and 1) must be present")

    def __len__(self) -> int:
        return len(self.subjects)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.subjects]

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.subjects], dtype=int)

    @property
    def n_timepoints(self) -> int:
        return self.subjects[0].n_timepoints

    @property
    def n_rois(self) -> int:
        return self.subjects[0].n_rois

    def summary(self) -> dict:
        labels = self.labels
        return {
            "N": len(self),
            "T": self.n_timepoints,
            "R": self.n_rois,
            "n_asd": int(labels.sum()),
            "n_control": int((labels == 0).sum()),
        }

    def summary_text(self) -> str:
        return "\n".join(f"{k}: {v}" for k, v in self.summary().items())


def _separator_for(path: Path, sep: str | None) -> str:
    if sep is not None:
        return sep
    return "\t" if path.suffix == ".tsv" else ","


def read_labels(labels_file) -> dict[str, int]:
    labels = {}
    with open(labels_file, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "label"} <= set(reader.fieldnames):
            raise CohortError(f"{labels_file}: header must contain 'id,label'")
        for row in reader:
            sid = row["id"].strip()
            try:
                value = int(row["label"])
            except ValueError:
                raise CohortError(f"subject {sid}: label {row['label']!r} is not an integer") from None
            if value not in (0, 1):
                raise CohortError(f"subject {sid}: label must be 0 or 1, got {value}")
            labels[sid] = value
    return labels


def load_cohort(series_dir, labels_file, sep: str | None = None) -> Cohort:
    """Read one delimited matrix per subject plus a ``id,label`` file.

    Subjects are ordered by id. ``sep`` overrides the separator, which
    otherwise follows the file suffix (tab for ``.tsv``, comma otherwise).
    """
    series_dir = Path(series_dir)
    labels = read_labels(labels_file)
    files = sorted(
        (p for p in series_dir.iterdir() if p.suffix in SERIES_SUFFIXES and p.is_file()),
        key=lambda p: p.stem,
    )
    files = [p for p in files if p.resolve() != Path(labels_file).resolve()]
    if not files:
        raise CohortError(f"no subject files found in {series_dir}")
    subjects = []
    for path in files:
        sid = path.stem
        if sid not in labels:
            raise CohortError(f"subject {sid}: missing label")
        try:
            series = np.loadtxt(path, delimiter=_separator_for(path, sep), ndmin=2)
        except ValueError as exc:
            raise CohortError(f"subject {sid}: cannot parse {path.name}: {exc}") from None
        subjects.append(SubjectRecord(sid, series, labels[sid]))
    log.info("loaded %d subjects from %s", len(subjects), series_dir)
    return Cohort(tuple(subjects))


def save_cohort(cohort: Cohort, out_dir, sep: str = ",") -> None:
    """Write a cohort in the layout read by :func:`load_cohort`."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = ".tsv" if sep == "\t" else ".csv"
    for s in cohort.subjects:
        np.savetxt(out_dir / f"{s.id}{suffix}", s.series, delimiter=sep, fmt="%.17g")
    with open(out_dir / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label"])
        for s in cohort.subjects:
            writer.writerow([s.id, s.label])


def _random_correlation(rng, r, n_factors=3, loading=0.5):
    loadings = rng.uniform(-loading, loading, size=(r, n_factors))
    cov = loadings @ loadings.T + np.eye(r)
    d = np.sqrt(np.diag(cov))
    return cov / np.outer(d, d)


def generate_synthetic_cohort(n_per_class: int, t: int, r: int, effect: float,
                              seed: int) -> Cohort:
    """Draw a two-class cohort whose classes differ only in ROI covariance.

    Controls sample i.i.d. rows from a seeded base correlation matrix.
    ASD subjects additionally share a latent signal across a fixed block of
    ROIs, with amplitude proportional to ``effect``, which raises the
    correlation of every pair inside the block. ``effect=0`` makes the
    classes identically distributed.
    """
    if n_per_class < 1:
        raise CohortError("n_per_class must be >= 1")
    if t < 3 or r < 2:
        raise CohortError(f"need t >= 3 and r >= 2, got t={t}, r={r}")
    if not 0.0 <= effect <= 1.0:
        raise CohortError(f"effect must lie in [0, 1], got {effect}")

    rng = np.random.default_rng(seed)
    base = _random_correlation(rng, r)
    block = np.sort(rng.choice(r, size=max(2, r // 2), replace=False))
    chol = np.linalg.cholesky(base)
    gain = np.zeros(r)
    gain[block] = 1.5 * effect

    width = len(str(2 * n_per_class - 1))
    subjects = []
    for n in range(2 * n_per_class):
        label = n % 2
        z = rng.standard_normal((t, r)) @ chol.T
        shared = rng.standard_normal((t, 1))
        if label == 1:
            z = z + shared * gain
        subjects.append(SubjectRecord(f"sub{n:0{width}d}", z, label))
    return Cohort(tuple(subjects))


@dataclass(frozen=True)
class SplitPlan:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    seed: int = field(default=0)


def _allocate(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``n`` items, ties to earlier parts."""
    raw = [f * n for f in fractions]
    counts = [int(np.floor(x + 1e-9)) for x in raw]
    rem = n - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:rem]:
        counts[i] += 1
    return counts


def split_stratified(labels, fractions=(0.64, 0.16, 0.2), seed: int = 0,
                     stratify: bool = True) -> SplitPlan:
    """Shuffle each class with ``seed`` and cut it by ``fractions``.

    ``labels`` may be a :class:`Cohort` or a label vector. Per-class counts
    match exact stratification up to rounding (at most one subject).
    """
    if isinstance(labels, Cohort):
        labels = labels.labels
    labels = np.asarray(labels, dtype=int)
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError("fractions must be (train, val, test)")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    train_f, val_f, test_f = fractions
    if train_f <= 0 or test_f <= 0 or val_f < 0:
        raise ValueError("train and test fractions must be positive, val non-negative")

    rng = np.random.default_rng(seed)
    groups = [np.flatnonzero(labels == c) for c in np.unique(labels)] if stratify \
        else [np.arange(len(labels))]
    parts = [[], [], []]
    needed = sum(f > 0 for f in fractions)
    for c, idx in zip(np.unique(labels) if stratify else ["all"], groups):
        if len(idx) < needed:
            raise ValueError(f"class {c} has {len(idx)} subjects, fewer than the {needed} partitions")
        idx = rng.permutation(idx)
        counts = _allocate(len(idx), fractions)
        for p, f in enumerate(fractions):
            if f > 0 and counts[p] == 0:
                raise ValueError(f"class {c} is too small to populate partition {p}")
        bounds = np.cumsum([0] + counts)
        for p in range(3):
            parts[p].extend(idx[bounds[p]:bounds[p + 1]].tolist())
    train, val, test = (np.array(sorted(p), dtype=int) for p in parts)
    return SplitPlan(train, val, test, seed)
