"""INI configuration for end-to-end runs.

Schema (section: keys)::

    [pipeline]     seed (required), output_dir
    [data]         series_dir + labels_file, or synthetic = yes with
                   n_per_class, timepoints, rois, effect
    [connectivity] method (pearson|spearman|partial), lambda
    [pca]          mode (off|count|variance), k, variance, fit_on (all|train)
    [model]        kind, rfe, sfm, plus any model parameter (c_reg, n_trees, neurons, ...)
    [tuning]       enabled, optimizers, learning_rates, batch_sizes, replicates,
                   max_epochs, patience (lists are comma separated)
    [evaluation]   protocol (cv|split), k, repeats, test_fraction, resplit, std_ddof

Every value that was not given is filled from the defaults below, and the
resolved mapping is echoed into the report header.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .connectivity import DEFAULT_LAMBDA, METHODS
from .registry import KINDS, RECURRENT, resolve_params
from .tuning import DEFAULT_BATCH_SIZES, DEFAULT_LEARNING_RATES, DEFAULT_OPTIMIZERS, HyperGrid


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _words(text: str) -> tuple[str, ...]:
    return tuple(v.strip().lower() for v in text.split(",") if v.strip())


@dataclass
class PipelineConfig:
    seed: int
    output_dir: str = "fc-out"
    series_dir: str | None = None
    labels_file: str | None = None
    synthetic: dict | None = None
    method: str = "pearson"
    lam: float = DEFAULT_LAMBDA
    pca_mode: str = "count"
    pca_k: int = 600
    pca_variance: float = 0.8
    pca_fit_on: str = "all"
    kind: str = "gru"
    model_params: dict = field(default_factory=dict)
    rfe: str | None = None
    sfm: str | None = None
    tune: bool = False
    grid: HyperGrid = field(default_factory=HyperGrid)
    tune_max_epochs: int = 100
    tune_patience: int = 5
    protocol: str = "split"
    k: int = 10
    repeats: int = 10
    test_fraction: float = 0.2
    resplit: bool = False
    std_ddof: int = 1

    def __post_init__(self):
        if (self.series_dir is None) == (self.synthetic is None):
            raise ConfigError("[data] needs either series_dir/labels_file or synthetic = yes")
        if self.series_dir is not None and self.labels_file is None:
            raise ConfigError("[data] labels_file is required with series_dir")
        if self.method not in METHODS:
            raise ConfigError(f"[connectivity] method must be one of {METHODS}")
        if self.pca_mode not in ("off", "count", "variance"):
            raise ConfigError("[pca] mode must be off, count or variance")
        if self.pca_fit_on not in ("all", "train"):
            raise ConfigError("[pca] fit_on must be all or train")
        if self.kind not in KINDS:
            raise ConfigError(f"[model] kind must be one of {KINDS}")
        if self.tune and self.kind not in RECURRENT:
            raise ConfigError("[tuning] grid search over optimizers applies to lstm/gru only")
        if self.protocol not in ("cv", "split"):
            raise ConfigError("[evaluation] protocol must be cv or split")
        if self.std_ddof not in (0, 1):
            raise ConfigError("[evaluation] std_ddof must be 0 or 1")
        try:
            self.model_params = resolve_params(self.kind, self.model_params)
        except ValueError as exc:
            raise ConfigError(f"[model] {exc}") from exc

    def resolved(self) -> dict[str, str]:
        """Flat, sorted key/value view of every setting in effect."""
        out = {
            "pipeline.seed": self.seed,
            "data.source": "synthetic" if self.synthetic else self.series_dir,
            "connectivity.method": self.method,
            "connectivity.lambda": self.lam,
            "pca.mode": self.pca_mode,
            "pca.k": self.pca_k,
            "pca.variance": self.pca_variance,
            "pca.fit_on": self.pca_fit_on,
            "model.kind": self.kind,
            "model.rfe": self.rfe,
            "model.sfm": self.sfm,
            "tuning.enabled": self.tune,
            "evaluation.protocol": self.protocol,
            "evaluation.std_ddof": self.std_ddof,
        }
        if self.synthetic:
            out.update({f"data.{k}": v for k, v in self.synthetic.items()})
        out.update({f"model.{k}": v for k, v in self.model_params.items()})
        if self.protocol == "cv":
            out.update({"evaluation.k": self.k, "evaluation.repeats": self.repeats})
        else:
            out.update({"evaluation.repeats": self.repeats,
                        "evaluation.test_fraction": self.test_fraction,
                        "evaluation.resplit": self.resplit})
        if self.tune:
            g = self.grid
            out.update({"tuning.optimizers": ",".join(g.optimizers),
                        "tuning.learning_rates": ",".join(map(repr, g.learning_rates)),
                        "tuning.batch_sizes": ",".join(map(str, g.batch_sizes)),
                        "tuning.replicates": g.replicates,
                        "tuning.max_epochs": self.tune_max_epochs,
                        "tuning.patience": self.tune_patience})
        if self.sfm is not None:
            out["model.sfm_selector"] = "logistic l2 c_reg=1.0"
        if self.kind == "ksvc" and "gamma" not in self.model_params:
            out["model.gamma"] = "1/(F*var(X))"
        if self.kind in RECURRENT:
            out["model.init"] = "uniform(+-1/sqrt(k)) input, uniform(+-1/sqrt(d)) recurrent, zero bias"
        return {k: str(v) for k, v in sorted(out.items())}


def parse_grid(section) -> HyperGrid:
    return HyperGrid(
        _words(section.get("optimizers", ",".join(DEFAULT_OPTIMIZERS))),
        _floats(section.get("learning_rates", ",".join(map(str, DEFAULT_LEARNING_RATES)))),
        _ints(section.get("batch_sizes", ",".join(map(str, DEFAULT_BATCH_SIZES)))),
        _ints(section.get("neurons", "10")),
        int(section.get("replicates", "3")),
    )


def read_config(path) -> PipelineConfig:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    return config_from_parser(cp, Path(path).parent)


def config_from_parser(cp: configparser.ConfigParser, base: Path = Path(".")) -> PipelineConfig:
    def sec(name):
        return cp[name] if cp.has_section(name) else {}

    pipe = sec("pipeline")
    if "seed" not in pipe:
        raise ConfigError("[pipeline] seed is required")
    data, conn, pca, model = sec("data"), sec("connectivity"), sec("pca"), sec("model")
    tuning, ev = sec("tuning"), sec("evaluation")

    def path(value):
        return None if value is None else str((base / value) if not Path(value).is_absolute() else value)

    synthetic = None
    if data.get("synthetic", "no").lower() in ("yes", "true", "1"):
        synthetic = {"n_per_class": int(data.get("n_per_class", 50)),
                     "timepoints": int(data.get("timepoints", 60)),
                     "rois": int(data.get("rois", 20)),
                     "effect": float(data.get("effect", 0.8))}
    model_params = {k: v for k, v in model.items() if k not in ("kind", "rfe", "sfm")}
    flag = lambda v: str(v).lower() in ("yes", "true", "1")
    try:
        return PipelineConfig(
            seed=int(pipe["seed"]),
            output_dir=path(pipe.get("output_dir", "fc-out")),
            series_dir=path(data.get("series_dir")),
            labels_file=path(data.get("labels_file")),
            synthetic=synthetic,
            method=conn.get("method", "pearson"),
            lam=float(conn.get("lambda", DEFAULT_LAMBDA)),
            pca_mode=pca.get("mode", "count"),
            pca_k=int(pca.get("k", 600)),
            pca_variance=float(pca.get("variance", 0.8)),
            pca_fit_on=pca.get("fit_on", "all"),
            kind=model.get("kind", "gru"),
            model_params=model_params,
            rfe=model.get("rfe"),
            sfm=model.get("sfm"),
            tune=flag(tuning.get("enabled", "no")),
            grid=parse_grid(tuning),
            tune_max_epochs=int(tuning.get("max_epochs", 100)),
            tune_patience=int(tuning.get("patience", 5)),
            protocol=ev.get("protocol", "split"),
            k=int(ev.get("k", 10)),
            repeats=int(ev.get("repeats", 10)),
            test_fraction=float(ev.get("test_fraction", 0.2)),
            resplit=flag(ev.get("resplit", "no")),
            std_ddof=int(ev.get("std_ddof", 1)),
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
