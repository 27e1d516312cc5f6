"""End-to-end acceptance checks with their tolerances pinned.

Each check records a PASS/FAIL line; the collected lines are printed once
per criterion in the terminal summary. A red check here is a real shortfall
and is analysed in the project's decision log, not relaxed.
"""
import os
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annbn import benchmarks
from annbn.clustering import balance, kmeans
from annbn.dataset import Dataset, normalize_targets
from annbn.ensemble import fit_ensemble
from annbn.kernels import KERNELS, Kernel, distance_sq, kernel_derivative, kernel_matrix
from annbn.pde import apply_operator, laplace_problem, laplacian_terms, solve_pde
from annbn.persistence import dumps, loads
from annbn.rbf_net import RbfConfig, fit_rbf
from annbn.sigmoid_net import SigmoidConfig, fit

from acceptance_log import record
from oracles import kernel_fd_mp

pytestmark = pytest.mark.filterwarnings("ignore::annbn.errors.RankDeficientWarning")

SEED = 0


@pytest.fixture(scope="module")
def f1d_reports():
    return {r.experiment: r for r in benchmarks.run_f1d(seed=SEED)}


def _secs(report):
    return sum(report.timings.values())


# --- 1-3: one-dimensional function ---------------------------------------------

def test_c1_sigmoid_1d(f1d_reports):
    r = f1d_reports["f1d/sigmoid"]
    ok = r.train_mae <= 1e-4 and r.test_mae <= 1e-4 and _secs(r) < 1.0
    record(1, "m=100, N=50, logistic", ok,
           f"train {r.train_mae:.3e} test {r.test_mae:.3e} (<= 1e-4), {_secs(r):.3f} s (< 1 s)")
    assert ok


def test_c2_rbf_1d(f1d_reports):
    r = f1d_reports["f1d/rbf"]
    ok = r.train_mae <= 1e-5 and r.test_mae <= 1e-5 and _secs(r) < 1.0
    record(2, "gaussian c=0.01, N=50", ok,
           f"train {r.train_mae:.3e} test {r.test_mae:.3e} (<= 1e-5), {_secs(r):.3f} s (< 1 s)")
    assert ok


def test_c3_noise_rejection(f1d_reports):
    r = f1d_reports["f1d/sigmoid-noisy"]
    ok = r.test_mae <= 3e-2
    record(3, "U(-1/20, 1/20) on train", ok, f"test {r.test_mae:.3e} (<= 3e-2)")
    assert ok


# --- 4-5: regression benchmarks --------------------------------------------------

def test_c4_poly5():
    (r,) = benchmarks.run_poly5(seed=SEED)
    ok = r.test_mae <= 1e-2
    record(4, "m=1000, noisy train", ok,
           f"test {r.test_mae:.3e} (<= 1e-2), c={r.config['c']:.4g}")
    assert ok


def test_c5_griewank():
    t0 = time.perf_counter()
    (r,) = benchmarks.run_griewank(seed=SEED)
    secs = time.perf_counter() - t0
    ok = r.test_mae <= 2e-2 and secs < 120.0
    record(5, "m=10000, noise U(-1/2, 1/2), domain [-5, 5]", ok,
           f"test {r.test_mae:.3e} (<= 2e-2), {secs:.1f} s (< 120 s)")
    assert ok


# --- 6: Laplace --------------------------------------------------------------------

@pytest.fixture(scope="module")
def laplace_runs():
    out = {}
    for noise in (0.0, 0.1):
        prob = laplace_problem(dx=0.02, noise=noise, seed=SEED)
        net = solve_pde(prob)
        out[noise] = (prob, net)
    return out


def _solution_mae(prob, net):
    err, _ = benchmarks.laplace_errors(net, prob)
    return err


def test_c6_laplace_solution(laplace_runs):
    err = _solution_mae(*laplace_runs[0.0])
    ok = err <= 1e-3
    record(6, "solution, dx=dy=0.02", ok, f"MAE {err:.3e} (<= 1e-3)")
    assert ok


def test_c6_laplace_noisy_source(laplace_runs):
    err = _solution_mae(*laplace_runs[0.1])
    ok = err <= 5e-3
    record(6, "solution, source U(0, 0.1)", ok, f"MAE {err:.3e} (<= 5e-3)")
    assert ok


def test_c6_second_derivative_field(laplace_runs):
    prob, net = laplace_runs[0.1]
    lap = apply_operator(net, laplacian_terms(2), prob.interior)
    # the closed-form solution is harmonic, so its smooth field is zero
    err = float(np.mean(np.abs(lap)))
    vs_source = float(np.mean(np.abs(lap - prob.source)))
    ok = err <= 2e-3
    record(6, "second-derivative field, noisy run", ok,
           f"MAE {err:.3e} vs harmonic field (<= 2e-3); {vs_source:.3e} vs sampled source")
    assert ok


# --- 7: MNIST ----------------------------------------------------------------------

def test_c7_mnist_desk_scale(mnist_path):
    (r,) = benchmarks.run_mnist(mnist_path, digits=(0,), subset=10_000, neurons=1000)
    acc = r.accuracy["0"]
    ok = acc >= 98.0
    record(7, "10k rows, 1000 neurons, ascending", ok,
           f"test accuracy {acc:.2f}% (>= 98.0%), fit {r.extra['fit_seconds']:.1f} s")
    assert ok


@pytest.mark.skipif(os.environ.get("ANNBN_MNIST_FULL") != "1",
                    reason="full-scale run is optional; set ANNBN_MNIST_FULL=1")
def test_c7_mnist_full_scale_report(mnist_path):
    (r,) = benchmarks.run_mnist(mnist_path, digits=(0,), subset=0, neurons=5000,
                                activation="erf")
    record(7, "optional 60k rows, 5000 neurons, erf (not gated)", None,
           f"test accuracy {r.accuracy['0']:.2f}% (target 99.0%), "
           f"fit {r.extra['fit_seconds']:.1f} s (reference budget 298 s)")


# --- 8: property suite ---------------------------------------------------------------

def test_c8_rbf_cluster_interpolation():
    rng = np.random.default_rng(SEED)
    X = rng.uniform(-1, 1, (300, 3))
    y = np.sin(X.sum(axis=1)) + X[:, 0] ** 2
    worst = 0.0
    for kind, c in (("gaussian", 0.8), ("multiquadric", 1.0)):
        net = fit_rbf(Dataset(X, y), RbfConfig(kind, c=c, neurons=15, seed=1))
        assert net.info["local_fallbacks"] == 0
        for cl in net.clusters:
            rows = (X[:, None, :] == cl.centers[None]).all(axis=2).argmax(axis=0)
            res = np.max(np.abs(kernel_matrix(net.kernel, cl.centers, cl.centers) @ cl.w - y[rows]))
            worst = max(worst, res / np.max(np.abs(y[rows])))
    ok = worst <= 1e-8
    record(8, "RBF per-cluster interpolation", ok, f"max relative residual {worst:.1e}")
    assert ok


def test_c8_sigmoid_local_solves():
    ds = benchmarks.gen_poly5(600, seed=SEED)
    cfg = SigmoidConfig(cluster="balanced", seed=SEED)
    y_s, _ = normalize_targets(ds.y, cfg.lo, cfg.hi)
    N = 600 // 6  # every cluster holds exactly n + 1 rows
    asg = balance(ds.X, kmeans(ds.X, N, seed=SEED), 6)
    net = fit(ds, cfg, assignment=asg)
    a = net.activation
    worst = 0.0
    for k, idx in enumerate(asg.groups()):
        assert idx.size == 6
        z = ds.X[idx] @ net.W[:-1, k] + net.W[-1, k]
        worst = max(worst, float(np.max(np.abs(z - a.inverse(y_s[idx])))))
    ok = worst <= 1e-8 and net.info["local_fallbacks"] == 0
    record(8, "sigmoid balanced local solves", ok, f"max residual {worst:.1e}")
    assert ok


_fd_worst = [0.0]


@settings(max_examples=400, deadline=None, derandomize=True)
@given(st.sampled_from(KERNELS), st.integers(1, 3), st.floats(0.3, 2.0),
       st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.integers(1, 2), st.data())
def _derivative_property(kind, n, c, coords, order, data):
    if kind == "integrated_gaussian_2":
        n = 1
    xj, x = coords[:n], coords[3:3 + n]
    if distance_sq(xj, x) <= 1e-4:
        return
    dim = data.draw(st.integers(0, n - 1))
    analytic = kernel_derivative(Kernel(kind, c), xj, x, order, dim)
    fd = kernel_fd_mp(kind, c, xj, x, dim, order)
    rel = abs(analytic - fd) / max(abs(fd), 1e-3)
    _fd_worst[0] = max(_fd_worst[0], rel)
    assert rel <= 1e-5


def test_c8_kernel_derivatives():
    _fd_worst[0] = 0.0
    try:
        _derivative_property()
        ok = True
    finally:
        record(8, "kernel derivatives vs finite differences", _fd_worst[0] <= 1e-5,
               f"max relative error {_fd_worst[0]:.1e} (<= 1e-5)")
    assert ok


def test_c8_output_layer_optimality():
    ds = benchmarks.gen_poly5(600, 1 / 20, seed=SEED)
    net = fit(ds, SigmoidConfig(neurons=60, seed=SEED))
    y_s, _ = normalize_targets(ds.y, 0.1, 0.9)
    O = net.hidden(ds.X)
    worst = np.max(np.abs(O.T @ (O @ net.v - y_s))) / np.max(np.abs(O.T @ y_s))
    rnet = fit_rbf(ds, RbfConfig("gaussian", c=1.0, neurons=30))
    Or = rnet.hidden(ds.X)
    worst = max(worst, np.max(np.abs(Or.T @ (Or @ rnet.v - ds.y))) / np.max(np.abs(Or.T @ ds.y)))
    ok = worst <= 1e-8
    record(8, "output-layer normal equations", ok, f"relative gradient {worst:.1e}")
    assert ok


def test_c8_ensemble_convexity():
    ds = benchmarks.gen_1d(100, 1 / 20, seed=SEED)
    ens = fit_ensemble(ds, SigmoidConfig(neurons=20, seed=SEED), n_f=10, alpha=0.8, seed=SEED)
    xt = np.linspace(0, 1, 500)[:, None]
    P = np.column_stack([m.predict(xt) for m in ens.members])
    y = ens.predict(xt)
    tol = 1e-12 * np.max(np.abs(P))
    ok = bool(np.all(y >= P.min(axis=1) - tol) and np.all(y <= P.max(axis=1) + tol))
    record(8, "ensemble convexity", ok, "min <= ensemble <= max at 500 points")
    assert ok


def _fit_all(seed):
    ds = benchmarks.gen_poly5(300, 1 / 20, seed=seed)
    return ds, [fit(ds, SigmoidConfig(neurons=30, seed=seed)),
                fit_rbf(ds, RbfConfig("gaussian", c=1.0, neurons=10, seed=seed)),
                fit_ensemble(ds, SigmoidConfig(neurons=20, seed=seed), n_f=3, seed=seed)]


def test_c8_reproducibility():
    ds, first = _fit_all(5)
    _, second = _fit_all(5)
    ok = all(dumps(a) == dumps(b) and np.array_equal(a.predict(ds.X), b.predict(ds.X))
             for a, b in zip(first, second))
    record(8, "bitwise reproducibility", ok, "sigmoid, RBF and ensemble refits")
    assert ok


def test_c8_save_load_identity():
    _, models = _fit_all(6)
    ok = all(dumps(loads(dumps(m))) == dumps(m) for m in models)
    record(8, "model save/load byte identity", ok, "sigmoid, RBF and ensemble files")
    assert ok


# --- 9: complexity shape --------------------------------------------------------------

def test_c9_local_solve_scaling():
    reports = benchmarks.run_scaling_study(n_fixed=20, m_list=(4000, 8000, 16000), seed=SEED)
    t = [r.timings["local_solve"] for r in reports]
    ratios = [t[i + 1] / t[i] for i in range(len(t) - 1)]
    ok = all(1.5 <= q <= 3.0 for q in ratios)
    record(9, "m = 4000 -> 8000 -> 16000, n = 20", ok,
           "local-solve ratios " + ", ".join(f"{q:.2f}" for q in ratios) + " (in [1.5, 3.0])")
    assert ok
