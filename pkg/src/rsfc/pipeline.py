"""End-to-end run: ingest, connectivity, PCA, tuning, final fit, evaluation, report.

Each stage reads the file written by the one before it, so a run can be
restarted from any persisted artifact. Files are written under a temporary
name and renamed on success; a failing stage leaves an ``INCOMPLETE`` marker
naming itself and the cause.
"""

from __future__ import annotations

import logging
import os
import pickle
from dataclasses import dataclass, field
from pathlib import Path

from .config import PipelineConfig
from .connectivity import FeatureMatrix, build_feature_matrix
from .dataset import generate_synthetic_cohort, load_cohort, save_cohort, split_stratified
from .dimred import PcaModel, fit_pca, transform
from .evaluation import MetricReport, repeated_cv, repeated_split
from .registry import RECURRENT, make_fitter
from .report import emit_report
from .tuning import grid_search

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    report: MetricReport
    artifacts: dict[str, Path] = field(default_factory=dict)
    stage_log: list[str] = field(default_factory=list)


def _atomic(path: Path, write) -> Path:
    tmp = path.with_name(path.name + ".partial")
    write(tmp)
    os.replace(tmp, path)
    return path


def pca_k(cfg: PipelineConfig):
    if cfg.pca_mode == "off":
        return None
    return cfg.pca_k if cfg.pca_mode == "count" else cfg.pca_variance


def _pca_fitter(inner, k):
    """Fit PCA on the training rows only, then the model on the scores."""

    def fit(fm, seed):
        pca = fit_pca(fm, k)
        return _Projected(pca, inner(transform(pca, fm), seed))

    return fit


@dataclass
class _Projected:
    pca: PcaModel
    inner: object

    def _x(self, x):
        return transform(self.pca, x)

    def predict_proba(self, x):
        return self.inner.predict_proba(self._x(x))

    def predict(self, x, threshold: float = 0.5):
        return self.inner.predict(self._x(x), threshold)

    def decision_function(self, x):
        if hasattr(self.inner, "decision_function"):
            return self.inner.decision_function(self._x(x))
        return self.inner.predict_proba(self._x(x))


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "INCOMPLETE"
    result = PipelineResult(report=None)

    def note(msg):
        log.info(msg)
        result.stage_log.append(msg)

    def stage(name, fn):
        marker.write_text(f"running {name}\n")
        try:
            return fn()
        except Exception as exc:
            marker.write_text(f"failed {name}: {exc}\n")
            raise StageError(name, exc) from exc

    # ingest
    def ingest():
        if cfg.synthetic:
            s = cfg.synthetic
            cohort = generate_synthetic_cohort(s["n_per_class"], s["timepoints"], s["rois"],
                                               s["effect"], cfg.seed)
            save_cohort(cohort, out / "cohort")
            cohort = load_cohort(out / "cohort", out / "cohort" / "labels.csv")
        else:
            cohort = load_cohort(cfg.series_dir, cfg.labels_file)
        note(f"ingest: {cohort.summary_text()}")
        return cohort

    cohort = stage("ingest", ingest)

    def connectivity():
        fm = build_feature_matrix(cohort, cfg.method, cfg.lam)
        path = _atomic(out / "features.csv", fm.save)
        note(f"connectivity: {cfg.method} features {fm.shape[0]} x {fm.shape[1]}")
        return path

    result.artifacts["features"] = stage("connectivity", connectivity)
    features = FeatureMatrix.load(result.artifacts["features"])

    k = pca_k(cfg)
    project_in_fitter = k is not None and cfg.pca_fit_on == "train"

    def pca():
        if k is None:
            note(f"pca: off, width {features.shape[1]}")
            return features
        model = fit_pca(features, k)
        result.artifacts["pca_model"] = _atomic(out / "pca_model.txt", model.save)
        if project_in_fitter:
            note(f"pca: refit on training rows of each split, {model.n_components} components on all rows")
            return features
        scores = transform(model, features)
        result.artifacts["scores"] = _atomic(out / "scores.csv", scores.save)
        note(f"pca: width {features.shape[1]} -> {scores.shape[1]}")
        return FeatureMatrix.load(result.artifacts["scores"])

    data = stage("pca", pca)
    plan = split_stratified(data.labels, (1 - cfg.test_fraction, 0.0, cfg.test_fraction), cfg.seed)
    params = dict(cfg.model_params)

    def tune():
        train = data.rows(plan.train_idx)
        inner = split_stratified(train.labels, (0.8, 0.0, 0.2), cfg.seed)
        tr, va = train.rows(inner.train_idx), train.rows(inner.test_idx)
        if project_in_fitter:
            pm = fit_pca(tr, k)
            tr, va = transform(pm, tr), transform(pm, va)
        best, lines = None, []
        for neurons in cfg.grid.neurons:
            res = grid_search(cfg.kind, neurons, tr, va, cfg.grid, cfg.seed)
            lines.append(f"# neurons={neurons}\n" + res.to_text())
            if best is None or res.best_score > best[0]:
                best = (res.best_score, neurons, res.best)
        score, neurons, (opt, lr, batch) = best
        params.update(neurons=neurons, optimizer=opt, learning_rate=lr, batch_size=batch)
        path = _atomic(out / "tuning.csv", lambda p: p.write_text("".join(lines)))
        note(f"tune: best neurons={neurons} {opt} lr={lr} batch={batch} val_acc={score:.4f}")
        return path

    if cfg.tune:
        result.artifacts["tuning"] = stage("tune", tune)

    fitter = make_fitter(cfg.kind, params, cfg.rfe, cfg.sfm)
    if project_in_fitter:
        fitter = _pca_fitter(fitter, k)

    def train():
        rows = plan.train_idx if cfg.protocol == "split" else slice(None)
        model = fitter(data.rows(rows) if cfg.protocol == "split" else data, cfg.seed)
        path = _atomic(out / "model.pkl", lambda p: p.write_bytes(pickle.dumps(model)))
        note(f"train: {cfg.kind} fitted on {len(data.labels[rows])} subjects")
        return path

    result.artifacts["model"] = stage("train", train)

    header = cfg.resolved()
    header.update({f"model.{k2}": str(v) for k2, v in params.items()})
    header = dict(sorted(header.items()))

    def evaluate():
        if cfg.protocol == "cv":
            rep = repeated_cv(fitter, data, cfg.k, cfg.repeats, cfg.seed, cfg.std_ddof, header)
        else:
            rep = repeated_split(fitter, data, cfg.repeats, cfg.seed, cfg.test_fraction,
                                 cfg.resplit, cfg.std_ddof, header)
        note(f"evaluate: {rep.protocol}, {rep.n_items} items")
        return rep

    result.report = stage("evaluate", evaluate)

    def write_report():
        result.artifacts["report"] = _atomic(
            out / "report.json", lambda p: emit_report(result.report, "structured", p))
        result.artifacts["report_table"] = _atomic(
            out / "report.txt", lambda p: emit_report(result.report, "table", p, cfg.kind))

    stage("report", write_report)
    (out / "stages.log").write_text("\n".join(result.stage_log) + "\n")
    marker.unlink()
    return result
