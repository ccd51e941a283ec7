"""Command-line entry point ``fc``."""

from __future__ import annotations

import argparse
import configparser
import logging
import pickle
import sys
from pathlib import Path

from .config import ConfigError, parse_grid, read_config
from .connectivity import DEFAULT_LAMBDA, METHODS, FeatureMatrix, build_feature_matrix
from .dataset import generate_synthetic_cohort, load_cohort, save_cohort, split_stratified
from .dimred import fit_pca, transform
from .evaluation import repeated_cv, repeated_split
from .pipeline import StageError, run_pipeline
from .registry import KINDS, RECURRENT, make_fitter, resolve_params
from .report import emit_report, read_report, render
from .tuning import HyperGrid, grid_search

log = logging.getLogger("rsfc")


def _read_params(path, section: str = "model") -> dict:
    if path is None:
        return {}
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read {path}")
    if not cp.has_section(section):
        return {}
    return {k: v for k, v in cp[section].items() if k not in ("kind", "rfe", "sfm")}


def _recurrent_overrides(args) -> dict:
    pairs = {"neurons": args.neurons, "optimizer": args.optimizer, "learning_rate": args.lr,
             "batch_size": args.batch, "patience": args.patience, "max_epochs": args.max_epochs}
    return {k: v for k, v in pairs.items() if v is not None}


def cmd_synth(args):
    cohort = generate_synthetic_cohort(args.n_per_class, args.t, args.r, args.effect, args.seed)
    save_cohort(cohort, args.out)
    print(cohort.summary_text())


def cmd_connectivity(args):
    labels = args.labels or str(Path(args.inp) / "labels.csv")
    cohort = load_cohort(args.inp, labels)
    fm = build_feature_matrix(cohort, args.method, args.lam)
    fm.save(args.out)
    print(f"{args.method} features: {fm.shape[0]} x {fm.shape[1]}")


def cmd_pca(args):
    fm = FeatureMatrix.load(args.inp)
    model = fit_pca(fm, args.k if args.k is not None else args.var)
    scores = transform(model, fm)
    scores.save(args.out)
    if args.model_out:
        model.save(args.model_out)
    print(f"pca: {fm.shape[1]} -> {scores.shape[1]} components "
          f"({model.explained_ratio.sum() * 100:.2f}% variance)")


def _grid_from_args(args) -> HyperGrid:
    if args.grid:
        cp = configparser.ConfigParser()
        if not cp.read(args.grid):
            raise ConfigError(f"cannot read grid file {args.grid}")
        section = cp["tuning"] if cp.has_section("tuning") else {}
        grid = parse_grid(section)
    else:
        grid = HyperGrid()
    return HyperGrid(grid.optimizers, grid.learning_rates, grid.batch_sizes, (args.neurons,),
                     args.replicates or grid.replicates)


def cmd_tune(args):
    fm = FeatureMatrix.load(args.features)
    plan = split_stratified(fm.labels, (1 - args.val_fraction, 0.0, args.val_fraction), args.seed)
    res = grid_search(args.model, args.neurons, fm.rows(plan.train_idx), fm.rows(plan.test_idx),
                      _grid_from_args(args), args.seed)
    text = res.to_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    opt, lr, batch = res.best
    print(f"best: {opt} lr={lr} batch={batch} val_accuracy={res.best_score:.4f}",
          file=sys.stderr if not args.out else sys.stdout)


def _params_for(args) -> dict:
    params = _read_params(args.params)
    if args.model in RECURRENT:
        params.update(_recurrent_overrides(args))
    return resolve_params(args.model, params)


def cmd_train(args):
    fm = FeatureMatrix.load(args.features)
    model = make_fitter(args.model, _params_for(args), args.rfe, args.sfm)(fm, args.seed)
    if args.model_out:
        Path(args.model_out).write_bytes(pickle.dumps(model))
    result = getattr(model, "result", None)
    if result is not None:
        # epoch, training loss, validation loss
        out = open(args.trace_out, "w") if args.trace_out else sys.stdout
        out.write("epoch,train_loss,val_loss\n")
        for epoch, tl, vl in result.trace_rows():
            out.write(f"{epoch},{tl!r},{vl!r}\n")
        if args.trace_out:
            out.close()
    acc = (model.predict(fm.values) == fm.labels).mean()
    print(f"{args.model}: training accuracy {acc * 100:.2f}%", file=sys.stderr)


def cmd_evaluate(args):
    fm = FeatureMatrix.load(args.features)
    fitter = make_fitter(args.model, _params_for(args), args.rfe, args.sfm)
    if args.protocol == "cv":
        rep = repeated_cv(fitter, fm, args.k, args.repeats, args.seed, args.std_ddof)
    else:
        rep = repeated_split(fitter, fm, args.repeats, args.seed, args.test_fraction,
                             args.resplit, args.std_ddof)
    rep.header.update({"model.kind": args.model, "pipeline.seed": str(args.seed)})
    if args.out:
        emit_report(rep, args.format, args.out, args.model)
    else:
        sys.stdout.write(render(rep, args.format, args.model))


def cmd_pipeline(args):
    cfg = read_config(args.config)
    if args.out:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    res = run_pipeline(cfg)
    for line in res.stage_log:
        print(line, file=sys.stderr)
    print(res.artifacts["report_table"].read_text(), end="")


def cmd_report(args):
    rep = read_report(args.inp)
    if args.out:
        emit_report(rep, args.format, args.out)
    else:
        sys.stdout.write(render(rep, args.format))


def _add_model_args(p, kinds):
    p.add_argument("--model", choices=kinds, required=True)
    p.add_argument("--features", required=True, help="feature file from connectivity or pca")
    p.add_argument("--params", help="INI file whose [model] section holds model parameters")
    p.add_argument("--rfe", help="'half' or a target feature count")
    p.add_argument("--sfm", help="'mean' or a numeric |weight| threshold")
    p.add_argument("--neurons", type=int)
    p.add_argument("--optimizer", choices=("adam", "nadam", "adagrad"))
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fc", description="Connectivity-based ASD classification")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic two-class cohort")
    p.add_argument("--n-per-class", type=int, default=50)
    p.add_argument("--t", type=int, default=60)
    p.add_argument("--r", type=int, default=20)
    p.add_argument("--effect", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("connectivity", help="ROI time series -> connectivity features")
    p.add_argument("--method", choices=METHODS, default="pearson")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--labels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_connectivity)

    p = sub.add_parser("pca", help="project features onto principal components")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--var", type=float)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("tune", help="grid search over optimizer, learning rate and batch size")
    p.add_argument("--model", choices=RECURRENT, required=True)
    p.add_argument("--neurons", type=int, default=10)
    p.add_argument("--features", required=True)
    p.add_argument("--grid", help="INI file with a [tuning] section")
    p.add_argument("--replicates", type=int)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="fit one model and save it")
    _add_model_args(p, KINDS)
    p.add_argument("--model-out")
    p.add_argument("--trace-out", help="per-epoch loss trace (recurrent models)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="repeated cross-validation or repeated hold-out")
    _add_model_args(p, KINDS)
    p.add_argument("--protocol", choices=("cv", "split"), default="cv")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--resplit", action="store_true")
    p.add_argument("--std-ddof", type=int, choices=(0, 1), default=1)
    p.add_argument("--format", choices=("table", "structured"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run every stage from an INI config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override [pipeline] output_dir")
    p.add_argument("--seed", type=int, help="override [pipeline] seed")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("report", help="re-render a structured report")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=("table", "structured"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except StageError as exc:
        print(f"fc {args.command}: [{exc.stage}] {exc.cause}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"fc {args.command}: [{args.command}] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
