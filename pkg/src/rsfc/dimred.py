"""Principal component analysis of feature matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connectivity import FeatureMatrix


class PcaError(ValueError):
    pass


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray          # (k, F), orthonormal rows
    explained_variance: np.ndarray  # (k,), nonincreasing
    explained_ratio: np.ndarray     # (k,)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]

    def save(self, path) -> None:
        """Delimited text blocks: mean, explained variance, ratio, components."""
        def line(v):
            return ",".join(repr(float(x)) for x in v)

        with open(path, "w") as fh:
            fh.write(f"# pca k={self.n_components} F={self.n_features}\n")
            fh.write("[mean]\n" + line(self.mean) + "\n")
            fh.write("[explained_variance]\n" + line(self.explained_variance) + "\n")
            fh.write("[explained_ratio]\n" + line(self.explained_ratio) + "\n")
            fh.write("[components]\n")
            for row in self.components:
                fh.write(line(row) + "\n")

    @classmethod
    def load(cls, path) -> "PcaModel":
        blocks: dict[str, list[list[float]]] = {}
        current = None
        with open(path) as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw or raw.startswith("#"):
                    continue
                if raw.startswith("["):
                    current = raw.strip("[]")
                    blocks[current] = []
                else:
                    blocks[current].append([float(x) for x in raw.split(",")])
        return cls(
            mean=np.array(blocks["mean"][0]),
            components=np.array(blocks["components"]),
            explained_variance=np.array(blocks["explained_variance"][0]),
            explained_ratio=np.array(blocks["explained_ratio"][0]),
        )


def _as_array(fm) -> np.ndarray:
    return fm.values if isinstance(fm, FeatureMatrix) else np.asarray(fm, dtype=float)


def fit_pca(fm, k: int | float | None = None, rank_tol: float = 1e-10) -> PcaModel:
    """Fit PCA by SVD of the mean-centered data.

    ``k`` is either a component count (int) or a target fraction of
    explained variance in (0, 1] (float), in which case the smallest count
    reaching the target is kept. ``None`` keeps every non-null component.
    Each component is signed so its largest-magnitude loading is positive.
    """
    x = _as_array(fm)
    n, f = x.shape
    if n < 2:
        raise PcaError("PCA needs at least 2 rows")
    mean = x.mean(axis=0)
    centered = x - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variance = s ** 2 / (n - 1)
    total = variance.sum()
    if total <= 0 or s[0] <= 0:
        raise PcaError("all rows are identical; nothing to decompose")
    rank = int(np.sum(s > rank_tol * s[0]))
    ratio = variance / total

    if k is None:
        keep = rank
    elif isinstance(k, (int, np.integer)) and not isinstance(k, bool):
        if k < 1 or k > min(n - 1, f):
            raise PcaError(f"k={k} outside [1, min(N-1, F)] = [1, {min(n - 1, f)}]")
        if k > rank:
            raise PcaError(f"k={k} exceeds the data rank {rank}")
        keep = int(k)
    else:
        target = float(k)
        if not 0.0 < target <= 1.0:
            raise PcaError(f"variance target must lie in (0, 1], got {target}")
        cumulative = np.cumsum(ratio[:rank])
        keep = int(np.searchsorted(cumulative, target - 1e-12) + 1)
        keep = min(keep, rank)

    components = vt[:keep].copy()
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(keep), pivots])
    components *= signs[:, None]
    return PcaModel(mean, components, variance[:keep].copy(), ratio[:keep].copy())


def transform(model: PcaModel, fm):
    """Project onto the components; FeatureMatrix in gives FeatureMatrix out."""
    x = _as_array(fm)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise PcaError(f"expected {model.n_features} columns, got shape {x.shape}")
    scores = (x - model.mean) @ model.components.T
    if not isinstance(fm, FeatureMatrix):
        return scores
    names = [f"pc{i + 1}" for i in range(model.n_components)]
    return FeatureMatrix(scores, fm.labels, names, f"pca({model.n_components})",
                         list(fm.subject_ids))


def inverse_transform(model: PcaModel, scores) -> np.ndarray:
    return _as_array(scores) @ model.components + model.mean
