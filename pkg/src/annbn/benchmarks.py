"""Synthetic problems, error metrics and experiment runners."""
from __future__ import annotations

import gc
import json
import math
import platform
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .clustering import default_neuron_count, kmeans
from .dataset import Dataset
from .errors import LengthMismatch, RankDeficientWarning

GRIEWANK_DOMAIN = (-5.0, 5.0)


def f1d(x):
    return 0.3 * np.sin(np.exp(3.0 * np.asarray(x, dtype=float))) + 0.5


def poly5(X):
    X = np.asarray(X, dtype=float)
    return (-X[:, 0] + X[:, 1] ** 2 / 2 - X[:, 2] ** 3 / 3
            + X[:, 3] ** 4 / 4 - X[:, 4] ** 5 / 5)


def griewank(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    i = np.arange(1, X.shape[1] + 1)
    return 1.0 + np.sum(X ** 2, axis=1) / 4000.0 - np.prod(np.cos(X / np.sqrt(i)), axis=1)


def _noise(rng, m, h):
    return rng.uniform(-h, h, m) if h > 0 else np.zeros(m)


def gen_1d(m, noise_halfwidth=0.0, seed=0):
    """``x ~ U(0, 1)``, ``y = 0.3 sin(exp(3x)) + 0.5`` plus ``U(-h, h)`` noise."""
    if m < 2:
        raise ValueError("m must be at least 2")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, m)
    y = f1d(x) + _noise(rng, m, noise_halfwidth)
    return Dataset(x.reshape(-1, 1), y, ["x"], "y")


def gen_poly5(m=1000, noise_halfwidth=0.0, seed=0):
    """Five inputs ``U(0.1, 0.9)`` through the alternating-power polynomial."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.1, 0.9, (m, 5))
    y = poly5(X) + _noise(rng, m, noise_halfwidth)
    return Dataset(X, y, [f"x{j + 1}" for j in range(5)], "y")


def gen_griewank(m, n, noise_halfwidth=0.0, seed=0, domain=GRIEWANK_DOMAIN):
    rng = np.random.default_rng(seed)
    X = rng.uniform(domain[0], domain[1], (m, n))
    y = griewank(X) + _noise(rng, m, noise_halfwidth)
    return Dataset(X, y, [f"x{j + 1}" for j in range(n)], "y")


def mae(pred, actual):
    pred = np.asarray(pred, dtype=float).reshape(-1)
    actual = np.asarray(actual, dtype=float).reshape(-1)
    if pred.shape != actual.shape:
        raise LengthMismatch(f"{pred.size} predictions for {actual.size} targets")
    if pred.size == 0:
        raise LengthMismatch("empty input")
    return float(np.mean(np.abs(pred - actual)))


def accuracy(pred_labels, actual_labels):
    """Percent of correctly classified labels."""
    p = np.asarray(pred_labels).reshape(-1)
    a = np.asarray(actual_labels).reshape(-1)
    if p.shape != a.shape:
        raise LengthMismatch(f"{p.size} predictions for {a.size} labels")
    if p.size == 0:
        raise LengthMismatch("empty input")
    return 100.0 * float(np.mean(p == a))


@dataclass
class RunReport:
    experiment: str
    config: dict
    train_mae: float | None = None
    test_mae: float | None = None
    accuracy: dict = field(default_factory=dict)
    timings: dict = field(default_factory=lambda: {"cluster": 0.0, "local_solve": 0.0,
                                                   "output_solve": 0.0})
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, default=_jsonable)


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def format_table(reports):
    """Fixed-width summary with one line per report."""
    head = f"{'experiment':<28} {'train MAE':>11} {'test MAE':>11} {'accuracy':>10} {'seconds':>9}"
    lines = [head, "-" * len(head)]
    for r in reports:
        acc = ", ".join(f"{k}:{v:.2f}" for k, v in r.accuracy.items()) or "-"
        secs = sum(r.timings.values())
        tr = f"{r.train_mae:.3e}" if r.train_mae is not None else "-"
        te = f"{r.test_mae:.3e}" if r.test_mae is not None else "-"
        lines.append(f"{r.experiment:<28} {tr:>11} {te:>11} {acc:>10} {secs:>9.3f}")
    return "\n".join(lines)


def write_csv(path, reports):
    """One row per report with the headline numbers, for external plotting."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["experiment", "seed", "train_mae", "test_mae", "accuracy",
                    "cluster_s", "local_solve_s", "output_solve_s", "m"])
        for r in reports:
            acc = ";".join(f"{k}:{v}" for k, v in r.accuracy.items())
            t = r.timings
            w.writerow([r.experiment, r.seed, r.train_mae, r.test_mae, acc,
                        t.get("cluster"), t.get("local_solve"), t.get("output_solve"),
                        r.config.get("m", "")])


def machine_info():
    return {"python": platform.python_version(), "machine": platform.machine(),
            "numpy": np.__version__}


def _report_from_net(name, net, test, seed, config):
    pred = net.predict(test.X)
    return RunReport(name, config, net.info["train_mae"], mae(pred, test.y),
                     timings=dict(net.info["timings"]), seed=seed)


# --- experiment runners ---------------------------------------------------

def run_f1d(seed=0, m=100, neurons=50, rbf_c=0.01, noise=1 / 20, n_test=1000):
    """Sigmoid and RBF fits of the 1D test function, noiseless and noisy.

    Test points are drawn from the same distribution and restricted to the
    training range, so the errors measure interpolation, not extrapolation.
    """
    from .rbf_net import RbfConfig, fit_rbf
    from .sigmoid_net import SigmoidConfig, fit

    train = gen_1d(m, 0.0, seed)
    noisy = gen_1d(m, noise, seed)
    lo, hi = train.X.min(), train.X.max()
    xt = np.random.default_rng(seed + 10_000).uniform(lo, hi, n_test)
    test = Dataset(xt.reshape(-1, 1), f1d(xt), ["x"], "y")

    # clusters of exactly n + 1 points interpolate clean data; plain k-means
    # averages noise better
    scfg = SigmoidConfig(neurons=neurons, cluster="balanced", seed=seed)
    ncfg = SigmoidConfig(neurons=neurons, cluster="kmeans", seed=seed)
    rcfg = RbfConfig(kernel="gaussian", c=rbf_c, neurons=neurons, seed=seed)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        for name, fitter, cfg, data in (
            ("f1d/sigmoid", fit, scfg, train),
            ("f1d/rbf", fit_rbf, rcfg, train),
            ("f1d/sigmoid-noisy", fit, ncfg, noisy),
        ):
            net = fitter(data, cfg)
            out.append(_report_from_net(name, net, test, seed,
                                        {**cfg.__dict__, "m": m, "noise": noise if data is noisy else 0.0}))
    return out


# resolved defaults for the regression suites; ``c`` is picked on a
# validation split from the matching grid
POLY5_RBF = {"kernel": "gaussian", "neurons": 50, "cluster": "kmeans"}
POLY5_GRID = tuple(float(c) for c in np.logspace(-0.5, 1.5, 9))
GRIEWANK_RBF = {"kernel": "gaussian", "cluster": "kmeans", "max_iter": 30}  # N = m // 20
GRIEWANK_GRID = (12.0, 16.0, 20.0, 25.0, 32.0, 40.0)


def _fit_selected(train, cfg, grid, seed):
    from .rbf_net import RbfConfig, fit_rbf, select_shape

    base = RbfConfig(**{**cfg, "seed": seed})
    t0 = time.perf_counter()
    c, scores = select_shape(train, base, grid=grid, seed=seed)
    t_sel = time.perf_counter() - t0
    net = fit_rbf(train, RbfConfig(**{**cfg, "seed": seed, "c": c}))
    return net, {"shape_grid": list(grid), "shape_scores": scores, "shape_search_s": t_sel}


def run_poly5(seed=0, m=1000, noise=1 / 20, cfg=None, grid=POLY5_GRID):
    cfg = cfg or POLY5_RBF
    train = gen_poly5(m, noise, seed)
    test = gen_poly5(m, 0.0, seed + 10_000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        net, extra = _fit_selected(train, cfg, grid, seed)
    r = _report_from_net("poly5/rbf", net, test, seed,
                         {**net.info["config"], "m": m, "noise": noise})
    r.extra = extra
    return [r]


def run_griewank(seed=0, m=10_000, n=100, noise=0.5, domain=GRIEWANK_DOMAIN, cfg=None,
                 grid=GRIEWANK_GRID):
    cfg = {"neurons": m // 20, **(cfg or GRIEWANK_RBF)}
    train = gen_griewank(m, n, noise, seed, domain)
    test = gen_griewank(m, n, 0.0, seed + 10_000, domain)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        net, extra = _fit_selected(train, cfg, grid, seed)
    r = _report_from_net("griewank/rbf", net, test, seed,
                         {**net.info["config"], "m": m, "n": n, "noise": noise,
                          "domain": list(domain)})
    r.extra = extra
    return [r]


def laplace_errors(net, problem, a=1.0, b=1.0, f0=1.0):
    """Solution MAE against the closed form over interior and boundary nodes,
    plus the mean absolute PDE residual at the interior nodes."""
    from .pde import laplace_exact, pde_residual

    pts = problem.all_points()
    exact = laplace_exact(a, b, f0, pts[:, 0], pts[:, 1])
    return mae(net.predict(pts), exact), float(np.mean(np.abs(pde_residual(net, problem))))


def run_laplace(seed=0, dx=0.02, noise=0.1, neurons=1):
    """Laplace on the unit square, then the same problem with a ``U(0, noise)`` source."""
    from .pde import PdeConfig, laplace_problem, solve_pde

    out = []
    for name, eps in (("laplace", 0.0), ("laplace/noisy-source", noise)):
        prob = laplace_problem(dx=dx, noise=eps, seed=seed)
        net = solve_pde(prob, PdeConfig(neurons=neurons, seed=seed))
        err, res = laplace_errors(net, prob)
        out.append(RunReport(name, {**net.info["config"], "dx": dx, "noise": eps,
                                    "kernel": net.kernel.kind, "c": net.kernel.c},
                             test_mae=err, timings=dict(net.info["timings"]), seed=seed,
                             extra={"residual_mae": res}))
    return out


def run_mnist(data_dir, digits=(0,), subset=10_000, neurons=1000, activation="logistic",
              eps=0.01, seed=0):
    """Binary one-digit models on an ascending-index partition of the first
    ``subset`` training rows, scored on the full test set."""
    import os

    from .dataset import load_mnist_idx
    from .sigmoid_net import SigmoidConfig, binary_accuracy, fit

    def path(stem):
        p = os.path.join(data_dir, stem)
        return p if os.path.exists(p) else p + ".gz"

    train = load_mnist_idx(path("train-images-idx3-ubyte"), path("train-labels-idx1-ubyte"))
    test = load_mnist_idx(path("t10k-images-idx3-ubyte"), path("t10k-labels-idx1-ubyte"))
    if subset and subset < train.m:
        train = train.take(np.arange(subset))
    # 0/1 targets mapped onto [eps, 1 - eps]
    cfg = SigmoidConfig(activation=activation, neurons=neurons, cluster="ascending",
                        lo=eps, hi=1.0 - eps, seed=seed)
    out = []
    for d in digits:
        y = (train.y == d).astype(float)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficientWarning)
            t0 = time.perf_counter()
            net = fit(Dataset(train.X, y), cfg)
            secs = time.perf_counter() - t0
        acc = binary_accuracy(net, test.X, test.y, d)
        tr = binary_accuracy(net, train.X, train.y, d)
        out.append(RunReport(f"mnist/digit{d}", {**cfg.__dict__, "eps": eps, "subset": train.m},
                             accuracy={str(d): acc}, timings=dict(net.info["timings"]),
                             seed=seed, extra={"train_accuracy": tr, "fit_seconds": secs}))
    return out


def run_scaling_study(n_fixed=20, m_list=(4000, 8000, 16000), seed=0, repeats=9):
    """Fit sigmoid nets at growing ``m`` and time each training phase.

    Clusters come from k-means balanced to ``n + 1`` points so the local
    phase solves exactly ``floor(m / (n + 1))`` square systems. Clustering
    runs once per ``m``. The two solve phases are repeated round-robin over
    all sizes after a warm-up pass, and each reports its fastest run, so
    slow spells on a shared machine hit every size alike.
    """
    from .clustering import balance
    from .dataset import normalize_targets
    from .sigmoid_net import Activation, local_weights, output_weights

    a = Activation()
    cases = []
    for m in m_list:
        ds = gen_griewank(m, n_fixed, 0.0, seed)
        N = default_neuron_count(m, n_fixed)
        y_s, _ = normalize_targets(ds.y)
        t0 = time.perf_counter()
        asg = balance(ds.X, kmeans(ds.X, N, seed=seed, max_iter=10), n_fixed + 1)
        best = {"cluster": time.perf_counter() - t0, "local_solve": math.inf,
                "output_solve": math.inf}
        cases.append((m, N, ds, y_s, asg, best))

    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        for r in range(repeats + 1):
            for m, N, ds, y_s, asg, best in cases:
                t1 = time.perf_counter()
                W, _ = local_weights(ds.X, y_s, asg, a)
                t2 = time.perf_counter()
                output_weights(ds.X, W, a, y_s)
                t3 = time.perf_counter()
                if r > 0:  # pass 0 warms caches and the BLAS pool
                    best["local_solve"] = min(best["local_solve"], t2 - t1)
                    best["output_solve"] = min(best["output_solve"], t3 - t2)
    finally:
        if gc_was_on:
            gc.enable()
    return [RunReport("scaling", {"m": m, "n": n_fixed, "neurons": N, "repeats": repeats},
                      timings=best, seed=seed)
            for m, N, ds, y_s, asg, best in cases]
