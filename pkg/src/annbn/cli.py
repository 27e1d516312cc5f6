"""Command-line front end: ``python -m annbn <command> ...``.

Exit codes: 0 on success, 1 on a data or model error, 2 on a usage error.
``ANNBN_THREADS`` caps the BLAS thread pool (0 or unset: library default).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from contextlib import nullcontext
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import benchmarks, persistence
from .dataset import Dataset, FeatureScaling, load_csv, load_mnist_idx, split
from .errors import AnnbnError, RankDeficientWarning, ShapeMismatch

SUITES = ("f1d", "poly5", "griewank", "mnist", "scaling", "laplace")
DEFAULT_MNIST_DIR = "/root/data/mnist"


class UsageError(Exception):
    """Flags that parse but do not make sense together."""


def _thread_limit():
    raw = os.environ.get("ANNBN_THREADS", "").strip()
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"ANNBN_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise UsageError("ANNBN_THREADS must be >= 0")
    if n == 0:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _emit_report(report, path=None):
    line = report.to_json()
    print(line)
    if path:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")


# --- data loading -------------------------------------------------------------

def _load_training_data(args):
    attrs = {}
    if args.data:
        ds = load_csv(args.data, args.target, has_header=not args.no_header)
        attrs["target"] = ds.target_name
    elif args.idx_images and args.idx_labels:
        ds = load_mnist_idx(args.idx_images, args.idx_labels)
        attrs["pixels"] = "divided_by_255"
    else:
        raise UsageError("give --data or both --idx-images and --idx-labels")
    if args.subset:
        ds = ds.take(np.arange(min(args.subset, ds.m)))
    if args.digit is not None:
        ds = Dataset(ds.X, (ds.y == args.digit).astype(float), ds.feature_names, "is_digit")
        attrs["digit"] = str(args.digit)
    return ds, attrs


def _load_features(model_file, args):
    """Inputs (and targets when present) for predict/evaluate."""
    if getattr(args, "idx_images", None):
        if not args.idx_labels:
            raise UsageError("--idx-images needs --idx-labels")
        ds = load_mnist_idx(args.idx_images, args.idx_labels)
        return ds.X, ds.y
    if not args.data:
        raise UsageError("give --data")
    target = args.target or model_file.attrs.get("target")
    if args.no_header:
        data = load_csv(args.data, None, has_header=False)
        X = np.column_stack([data.X, data.y])
        if X.shape[1] == model_file.n_features + 1:
            return X[:, :-1], X[:, -1]
        return X, None
    with open(args.data, newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh), [])]
    if target and target in header:
        ds = load_csv(args.data, target)
        return ds.X, ds.y
    ds = load_csv(args.data, None)
    return np.column_stack([ds.X, ds.y]), None


# --- train --------------------------------------------------------------------

def _sigmoid_cfg(args, ds):
    from .sigmoid_net import SigmoidConfig

    lo, hi = args.lo, args.hi
    if args.digit is not None:
        lo, hi = args.eps, 1.0 - args.eps
    return SigmoidConfig(activation=args.activation, clamp_eps=args.clamp_eps,
                         neurons=args.neurons, cluster=args.cluster or "kmeans",
                         lo=lo, hi=hi, seed=args.seed, max_iter=args.max_iter)


def _rbf_cfg(args, ds):
    from .rbf_net import RbfConfig, select_shape

    cluster = args.cluster or "kmeans"
    if cluster == "balanced":
        raise UsageError("--cluster balanced applies to sigmoid models only")
    cfg = RbfConfig(kernel=args.kernel, c=1.0, neurons=args.neurons, cluster=cluster,
                    seed=args.seed, normalize=args.normalize_rbf, lo=args.lo, hi=args.hi,
                    max_iter=args.max_iter)
    if args.c == "auto":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficientWarning)
            c, _ = select_shape(ds, cfg, seed=args.seed)
    else:
        try:
            c = float(args.c)
        except ValueError:
            raise UsageError(f"--c must be a number or 'auto', got {args.c!r}") from None
    return replace(cfg, c=c)


def _fit_model(args, ds):
    from .deep import DeepConfig, deepen, stack_layers
    from .ensemble import fit_ensemble
    from .rbf_net import fit_rbf
    from .sigmoid_net import fit

    if args.model == "rbf":
        cfg = _rbf_cfg(args, ds)
        return fit_rbf(ds, cfg), cfg.__dict__
    cfg = _sigmoid_cfg(args, ds)
    if args.model == "sigmoid":
        return fit(ds, cfg), cfg.__dict__
    if args.model == "deep":
        if args.layers < 2:
            raise UsageError("--layers must be at least 2 for deep models")
        dcfg = DeepConfig(seed=args.seed)
        if args.construction == "stack":
            net = stack_layers(ds, args.layers, cfg, deep_cfg=dcfg)
        else:
            net = deepen(fit(ds, cfg), ds, args.layers, dcfg)
        return net, {**cfg.__dict__, **{f"deep_{k}": v for k, v in dcfg.__dict__.items()},
                     "layers": args.layers, "construction": args.construction}
    base = _rbf_cfg(args, ds) if args.base == "rbf" else cfg
    ens = fit_ensemble(ds, base, n_f=args.n_f, alpha=args.alpha, seed=args.seed)
    return ens, {**base.__dict__, "base": args.base, "n_f": args.n_f, "alpha": args.alpha}


def cmd_train(args):
    ds, attrs = _load_training_data(args)
    holdout = None
    if args.holdout:
        ds, holdout = split(ds, args.holdout, args.seed)
    scaling = FeatureScaling.fit(ds.X) if args.scale_features else None
    fit_ds = Dataset(scaling.apply(ds.X), ds.y, ds.feature_names, ds.target_name) \
        if scaling is not None else ds
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        model, config = _fit_model(args, fit_ds)
    mf = persistence.ModelFile(model, scaling, attrs)

    pred = mf.predict(ds.X)
    report = benchmarks.RunReport(f"train/{args.model}",
                                  {**config, "model": args.model, "data": args.data,
                                   "scale_features": args.scale_features,
                                   "holdout": args.holdout},
                                  train_mae=benchmarks.mae(pred, ds.y), seed=args.seed)
    info = getattr(model, "info", {})
    if "timings" in info:
        report.timings = dict(info["timings"])
    if args.digit is not None:
        report.accuracy["train"] = 100.0 * float(np.mean((pred >= 0.5) == (ds.y == 1.0)))
    if holdout is not None:
        hp = mf.predict(holdout.X)
        report.test_mae = benchmarks.mae(hp, holdout.y)
        if args.digit is not None:
            report.accuracy["holdout"] = 100.0 * float(np.mean((hp >= 0.5) == (holdout.y == 1.0)))
    persistence.save_model(args.out, mf)
    _emit_report(report, args.report)
    print(f"train MAE {report.train_mae:.17g}", file=sys.stderr)
    return 0


# --- predict / evaluate -------------------------------------------------------

def cmd_predict(args):
    mf = persistence.load_model(args.model)
    X, _ = _load_features(mf, args)
    if X.shape[1] != mf.n_features:
        raise ShapeMismatch(f"model expects {mf.n_features} features, file has {X.shape[1]}")
    pred = mf.predict(X)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["prediction"])
        for p in pred:
            w.writerow([format(float(p), ".17g")])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_evaluate(args):
    mf = persistence.load_model(args.model)
    X, y = _load_features(mf, args)
    if X.shape[1] != mf.n_features:
        raise ShapeMismatch(f"model expects {mf.n_features} features, file has {X.shape[1]}")
    if y is None:
        raise UsageError("evaluation needs a target column (use --target)")
    pred = mf.predict(X)
    result = {"model": args.model, "rows": int(X.shape[0])}
    digit = mf.attrs.get("digit")
    if digit is not None:
        truth = (y == float(digit)) if getattr(args, "idx_images", None) else (y == 1.0)
        result["accuracy"] = 100.0 * float(np.mean((pred >= 0.5) == truth))
    else:
        result["mae"] = benchmarks.mae(pred, y)
    print(json.dumps(result, sort_keys=True))
    return 0


# --- solve-pde ----------------------------------------------------------------

def cmd_solve_pde(args):
    from .kernels import Kernel
    from .pde import PdeConfig, load_problem, pde_residual, solve_pde

    overrides = {k: getattr(args, k) for k in ("dx", "dy", "noise", "seed")
                 if getattr(args, k) is not None}
    if args.c is not None and args.kernel is None:
        raise UsageError("--c needs --kernel")
    kernel = Kernel(args.kernel, args.c) if args.kernel and args.c else None
    if args.kernel and not args.c:
        raise UsageError("--kernel needs --c")
    prob, exact = load_problem(args.problem, overrides or None, kernel)
    net = solve_pde(prob, PdeConfig(neurons=args.neurons, seed=args.seed or 0,
                                    boundary_weight=args.boundary_weight))
    res = float(np.mean(np.abs(pde_residual(net, prob))))
    report = benchmarks.RunReport("solve-pde", {**net.info["config"], "problem": args.problem,
                                                "kernel": net.kernel.kind, "c": net.kernel.c,
                                                **overrides},
                                  timings=dict(net.info["timings"]), seed=args.seed or 0,
                                  extra={"residual_mae": res})
    if exact is not None:
        err, _ = benchmarks.laplace_errors(net, prob, exact["a"], exact["b"], exact["f0"])
        report.test_mae = err
        report.extra["exact"] = exact["name"]
    if args.out:
        persistence.save_model(args.out, net)
    _emit_report(report, args.report)
    if exact is not None:
        print(f"MAE vs exact {report.test_mae:.6e}", file=sys.stderr)
    return 0


# --- bench --------------------------------------------------------------------

def cmd_bench(args):
    suite = args.suite
    if suite == "f1d":
        reports = benchmarks.run_f1d(seed=args.seed)
    elif suite == "poly5":
        reports = benchmarks.run_poly5(seed=args.seed)
    elif suite == "griewank":
        reports = benchmarks.run_griewank(seed=args.seed)
    elif suite == "laplace":
        reports = benchmarks.run_laplace(seed=args.seed)
    elif suite == "scaling":
        reports = benchmarks.run_scaling_study(seed=args.seed)
    else:
        try:
            digits = tuple(int(d) for d in args.digits.split(","))
        except ValueError:
            raise UsageError(f"--digits must be a comma-separated list, got {args.digits!r}") from None
        data_dir = args.mnist_dir or os.environ.get("ANNBN_MNIST_DIR", DEFAULT_MNIST_DIR)
        reports = benchmarks.run_mnist(data_dir, digits=digits, subset=args.subset,
                                       neurons=args.neurons, activation=args.activation,
                                       seed=args.seed)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{suite}.jsonl").unlink(missing_ok=True)
    for r in reports:
        _emit_report(r, out_dir / f"{suite}.jsonl" if out_dir else None)
    table = benchmarks.format_table(reports)
    print(table, file=sys.stderr)
    if out_dir is not None:
        (out_dir / f"{suite}.txt").write_text(table + "\n", encoding="utf-8")
        benchmarks.write_csv(out_dir / f"{suite}.csv", reports)
    return 0


# --- argument parsing ---------------------------------------------------------

def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _fraction(s):
    v = float(s)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="annbn", description="Neural networks by neighborhoods.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit a model and write a model file")
    t.add_argument("--data", help="CSV file with a header row")
    t.add_argument("--target", help="response column (default: last column)")
    t.add_argument("--no-header", action="store_true")
    t.add_argument("--idx-images", help="IDX image file (MNIST format)")
    t.add_argument("--idx-labels", help="IDX label file")
    t.add_argument("--digit", type=int, help="train a binary model for this label")
    t.add_argument("--subset", type=_positive_int, help="use only the first rows")
    t.add_argument("--model", choices=("sigmoid", "rbf", "deep", "ensemble"), default="sigmoid")
    t.add_argument("--activation", choices=("logistic", "erf"), default="logistic")
    t.add_argument("--clamp-eps", type=float, default=1e-6)
    t.add_argument("--kernel", default="gaussian",
                   choices=("gaussian", "multiquadric", "quartic_polyharmonic",
                            "integrated_gaussian_2"))
    t.add_argument("--c", default="1.0", help="RBF shape parameter or 'auto'")
    t.add_argument("--normalize-rbf", action="store_true", help="scale RBF targets to [lo, hi]")
    t.add_argument("--neurons", type=_positive_int, help="default: floor(m / (n + 1))")
    t.add_argument("--cluster", choices=("kmeans", "balanced", "ascending", "single"))
    t.add_argument("--max-iter", type=_positive_int, default=100)
    t.add_argument("--lo", type=float, default=0.1)
    t.add_argument("--hi", type=float, default=0.9)
    t.add_argument("--eps", type=float, default=0.01, help="target margin for --digit models")
    t.add_argument("--layers", type=int, default=2)
    t.add_argument("--construction", choices=("deepen", "stack"), default="deepen")
    t.add_argument("--base", choices=("sigmoid", "rbf"), default="sigmoid")
    t.add_argument("--n-f", type=_positive_int, default=10)
    t.add_argument("--alpha", type=float, default=0.8)
    t.add_argument("--scale-features", action="store_true", help="min-max scale inputs")
    t.add_argument("--holdout", type=_fraction, help="fraction held out for a test MAE")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--report", help="append the run report to this file")
    t.set_defaults(func=cmd_train)

    for name, func, hlp in (("predict", cmd_predict, "write predictions as CSV"),
                            ("evaluate", cmd_evaluate, "score a model on labelled data")):
        q = sub.add_parser(name, help=hlp)
        q.add_argument("--model", required=True)
        q.add_argument("--data")
        q.add_argument("--target")
        q.add_argument("--no-header", action="store_true")
        q.add_argument("--idx-images")
        q.add_argument("--idx-labels")
        if name == "predict":
            q.add_argument("--out", help="default: standard output")
        q.set_defaults(func=func)

    s = sub.add_parser("solve-pde", help="solve a PDE problem file")
    s.add_argument("--problem", required=True)
    s.add_argument("--kernel", choices=("gaussian", "multiquadric", "quartic_polyharmonic",
                                        "integrated_gaussian_2"))
    s.add_argument("--c", type=float)
    s.add_argument("--neurons", type=_positive_int, default=1)
    s.add_argument("--boundary-weight", type=float, default=1.0)
    s.add_argument("--dx", type=float)
    s.add_argument("--dy", type=float)
    s.add_argument("--noise", type=float, help="U(0, noise) source for builtin problems")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="model file to write")
    s.add_argument("--report", help="append the run report to this file")
    s.set_defaults(func=cmd_solve_pde)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--suite", required=True, choices=SUITES)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out-dir")
    b.add_argument("--digits", default="0")
    b.add_argument("--subset", type=_positive_int, default=10_000)
    b.add_argument("--neurons", type=_positive_int, default=1000)
    b.add_argument("--activation", choices=("logistic", "erf"), default="logistic")
    b.add_argument("--mnist-dir")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except UsageError as e:
        print(f"annbn {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (AnnbnError, OSError, ValueError, KeyError) as e:
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"annbn {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
