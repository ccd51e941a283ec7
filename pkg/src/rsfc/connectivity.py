"""Resting-state functional connectivity estimators and feature vectors."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .dataset import Cohort

METHODS = ("pearson", "spearman", "partial")
DEFAULT_LAMBDA = 0.1


class ConnectivityError(ValueError):
    pass


@dataclass(frozen=True)
class ConnectivityMatrix:
    values: np.ndarray
    method: str
    subject_id: str = ""

    @property
    def n_rois(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ShrinkageConfig:
    """Convex shrinkage ``(1 - lam) * S + lam * mu * I`` of a covariance ``S``."""

    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"shrinkage lambda must lie in [0, 1], got {self.lam}")


@dataclass
class FeatureMatrix:
    """Design matrix with aligned labels.

    ``provenance`` is ``"raw-rsfc:<method>"`` for vectorized connectivity or
    ``"pca(<k>)"`` for principal component scores.
    """

    values: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    provenance: str
    subject_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.values.ndim != 2:
            raise ValueError("feature values must be 2-D")
        n, f = self.values.shape
        if self.labels.shape != (n,):
            raise ValueError(f"labels length {self.labels.shape} does not match {n} rows")
        if len(self.feature_names) != f:
            raise ValueError(f"{len(self.feature_names)} feature names for {f} columns")
        if not self.subject_ids:
            self.subject_ids = [str(i) for i in range(n)]
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains non-finite entries")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __len__(self) -> int:
        return self.values.shape[0]

    def rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(self.values[idx], self.labels[idx], list(self.feature_names),
                             self.provenance, [self.subject_ids[i] for i in idx])

    def columns(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(self.values[:, idx], self.labels, [self.feature_names[i] for i in idx],
                             self.provenance, list(self.subject_ids))

    def save(self, path, sep: str = ",") -> None:
        """Header of feature names plus a trailing ``label`` column."""
        with open(path, "w", newline="") as fh:
            fh.write(f"# provenance={self.provenance}\n")
            writer = csv.writer(fh, delimiter=sep, lineterminator="\n")
            writer.writerow(["id", *self.feature_names, "label"])
            for sid, row, y in zip(self.subject_ids, self.values, self.labels):
                writer.writerow([sid, *(repr(float(v)) for v in row), int(y)])

    @classmethod
    def load(cls, path, sep: str = ",") -> "FeatureMatrix":
        provenance = "unknown"
        with open(path, newline="") as fh:
            first = fh.readline()
            if first.startswith("# provenance="):
                provenance = first.strip().split("=", 1)[1]
            else:
                fh.seek(0)
            reader = csv.reader(fh, delimiter=sep)
            header = next(reader)
            ids, rows, labels = [], [], []
            for rec in reader:
                if not rec:
                    continue
                ids.append(rec[0])
                rows.append([float(v) for v in rec[1:-1]])
                labels.append(int(rec[-1]))
        values = np.array(rows, dtype=float).reshape(len(rows), len(header) - 2)
        return cls(values, np.array(labels), header[1:-1], provenance, ids)


def _check_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 2:
        raise ConnectivityError(f"series must be 2-D, got shape {x.shape}")
    if x.shape[0] < 3:
        raise ConnectivityError(f"need at least 3 time points, got {x.shape[0]}")
    if x.shape[1] < 2:
        raise ConnectivityError(f"need at least 2 ROIs, got {x.shape[1]}")
    flat = np.flatnonzero(np.ptp(x, axis=0) == 0)
    if flat.size:
        raise ConnectivityError(f"column {flat[0]} is constant (zero variance)")
    return x


def _correlation(x: np.ndarray) -> np.ndarray:
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    sd = np.sqrt(np.diag(cov))
    corr = cov / np.outer(sd, sd)
    corr = (corr + corr.T) / 2
    np.clip(corr, -1.0, 1.0, out=corr)
    np.fill_diagonal(corr, 1.0)
    return corr


def pearson_matrix(series, subject_id: str = "") -> ConnectivityMatrix:
    return ConnectivityMatrix(_correlation(_check_series(series)), "pearson", subject_id)


def rank_transform(series) -> np.ndarray:
    """Column-wise ranks starting at 1; ties share the mean of their span."""
    return rankdata(np.asarray(series, dtype=float), method="average", axis=0)


def spearman_matrix(series, subject_id: str = "") -> ConnectivityMatrix:
    x = _check_series(series)
    return ConnectivityMatrix(_correlation(rank_transform(x)), "spearman", subject_id)


def partial_matrix(series, cfg: ShrinkageConfig | None = None,
                   subject_id: str = "") -> ConnectivityMatrix:
    """Partial correlations from the precision of a shrunk correlation matrix.

    The sample covariance is standardized to a correlation matrix first, so
    the identity target is already on scale (mean variance 1).
    """
    cfg = cfg or ShrinkageConfig()
    corr = _correlation(_check_series(series))
    r = corr.shape[0]
    shrunk = (1.0 - cfg.lam) * corr + cfg.lam * np.eye(r)
    eig = np.linalg.eigvalsh(shrunk)
    if eig[0] <= 1e-10 * max(eig[-1], 1.0):
        # eigenvalues of the shrunk matrix are (1 - lam) * e + lam >= lam, e >= 0
        raise ConnectivityError(
            f"shrunk covariance is not positive definite (min eigenvalue {eig[0]:.3g}) "
            f"at lambda={cfg.lam}; try lambda >= {max(0.01, 10 * cfg.lam):.3g}"
        )
    chol = np.linalg.cholesky(shrunk)
    inv_chol = np.linalg.solve(chol, np.eye(r))
    precision = inv_chol.T @ inv_chol
    d = np.sqrt(np.diag(precision))
    pc = -precision / np.outer(d, d)
    pc = (pc + pc.T) / 2
    np.clip(pc, -1.0, 1.0, out=pc)
    np.fill_diagonal(pc, 1.0)
    return ConnectivityMatrix(pc, "partial", subject_id)


def connectivity_matrix(series, method: str, lam: float = DEFAULT_LAMBDA,
                        subject_id: str = "") -> ConnectivityMatrix:
    if method == "pearson":
        return pearson_matrix(series, subject_id)
    if method == "spearman":
        return spearman_matrix(series, subject_id)
    if method == "partial":
        return partial_matrix(series, ShrinkageConfig(lam), subject_id)
    raise ValueError(f"unknown connectivity method {method!r}; expected one of {METHODS}")


def vectorize_upper(cm) -> np.ndarray:
    """Strict upper triangle in row-major order, length ``R(R-1)/2``."""
    values = cm.values if isinstance(cm, ConnectivityMatrix) else np.asarray(cm)
    i, j = np.triu_indices(values.shape[0], k=1)
    return values[i, j].copy()


def unvectorize_upper(vec, diagonal: float = 1.0) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    r = int(round((1 + np.sqrt(1 + 8 * len(vec))) / 2))
    if r * (r - 1) // 2 != len(vec):
        raise ValueError(f"length {len(vec)} is not a triangular number R(R-1)/2")
    out = np.full((r, r), diagonal)
    i, j = np.triu_indices(r, k=1)
    out[i, j] = vec
    out[j, i] = vec
    return out


def pair_names(r: int) -> list[str]:
    i, j = np.triu_indices(r, k=1)
    return [f"roi{a}-roi{b}" for a, b in zip(i, j)]


def build_feature_matrix(cohort: Cohort, method: str = "pearson",
                         lam: float = DEFAULT_LAMBDA) -> FeatureMatrix:
    rows = np.empty((len(cohort), cohort.n_rois * (cohort.n_rois - 1) // 2))
    for n, subject in enumerate(cohort.subjects):
        try:
            cm = connectivity_matrix(subject.series, method, lam, subject.id)
        except ConnectivityError as exc:
            raise ConnectivityError(f"subject {subject.id}: {exc}") from None
        rows[n] = vectorize_upper(cm)
    return FeatureMatrix(rows, cohort.labels, pair_names(cohort.n_rois),
                         f"raw-rsfc:{method}", cohort.ids)
