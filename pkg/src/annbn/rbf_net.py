"""RBF networks by neighborhoods.

Within each cluster the responses are interpolated exactly with a radial
kernel centred on the cluster's own observations. Each cluster interpolant
then acts as one hidden neuron, and the output layer combines them by least
squares over the full sample. The same weights give every derivative of the
fitted function, since only the kernel is differentiated.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics
from .clustering import ascending_partition, default_neuron_count, kmeans
from .dataset import NormParams, normalize_targets, split
from .errors import ShapeMismatch, SingularKernelWarning
from .kernels import (  # noqa: F401  (re-exported)
    Kernel,
    derivative_matrix,
    distance_sq,
    kernel_derivative,
    kernel_eval,
    kernel_matrix,
)

CLUSTER_MODES = ("kmeans", "ascending", "single")


@dataclass(frozen=True)
class RbfConfig:
    kernel: str = "gaussian"
    c: float = 1.0
    neurons: int | None = None  # None -> floor(m / (n + 1))
    cluster: str = "kmeans"
    seed: int = 0
    normalize: bool = False
    lo: float = 0.1
    hi: float = 0.9
    max_iter: int = 100

    def __post_init__(self):
        if self.cluster not in CLUSTER_MODES:
            raise ValueError(f"unknown cluster mode {self.cluster!r}; choose from {CLUSTER_MODES}")


@dataclass(frozen=True)
class RbfCluster:
    centers: np.ndarray
    w: np.ndarray


@dataclass(eq=False)
class RbfNet:
    kernel: Kernel
    clusters: list
    v: np.ndarray
    norm: NormParams | None
    n_features: int
    info: dict = field(default_factory=dict, repr=False)

    @property
    def n_neurons(self) -> int:
        return len(self.clusters)

    def hidden(self, X, order=0, dim=0):
        """Global design matrix: one column per cluster interpolant, then ones.

        With ``order > 0`` the columns hold that derivative of each
        interpolant and the ones column becomes zeros.
        """
        X = _as_matrix(X, self.n_features)
        return global_matrix(self.kernel, self.clusters, X, order, dim)

    def predict_scaled(self, X):
        return self.hidden(X) @ self.v

    def predict(self, X):
        s = self.predict_scaled(X)
        return self.norm.denormalize(s) if self.norm is not None else s


def _as_matrix(X, n_features):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if n_features == 1 else X.reshape(1, -1)
    if X.shape[1] != n_features:
        raise ShapeMismatch(f"model expects {n_features} features, got {X.shape[1]}")
    return X


def global_matrix(kernel, clusters, X, order=0, dim=0):
    O = np.empty((X.shape[0], len(clusters) + 1))
    for k, cl in enumerate(clusters):
        O[:, k] = derivative_matrix(kernel, cl.centers, X, order, dim) @ cl.w
    O[:, -1] = 1.0 if order == 0 else 0.0
    return O


def _assignment(X, cfg):
    m, n = X.shape
    if cfg.cluster == "single":
        return ascending_partition(m, m)
    N = cfg.neurons or default_neuron_count(m, n)
    N = min(N, m)
    if cfg.cluster == "ascending":
        return ascending_partition(m, max(m // N, 1))
    return kmeans(X, N, seed=cfg.seed, max_iter=cfg.max_iter)


def interpolate_cluster(kernel, centers, y_k):
    """Weights of the exact interpolant through one cluster; returns ``(w, fell_back)``."""
    Phi = kernel_matrix(kernel, centers, centers)
    w, rep = numerics.solve_square(Phi, y_k)
    return w, rep.fell_back


def fit_rbf(ds, cfg=None, assignment=None):
    """Fit an RBF network on ``ds``.

    Each cluster's kernel matrix is solved directly, or by pseudo-inverse
    when it is numerically singular (a ``SingularKernelWarning`` is issued).
    """
    cfg = cfg or RbfConfig()
    kernel = Kernel(cfg.kernel, cfg.c)
    kernel.check_dimension(ds.n)
    X = ds.X
    if cfg.normalize:
        y, norm = normalize_targets(ds.y, cfg.lo, cfg.hi)
    else:
        y, norm = ds.y, None

    t0 = time.perf_counter()
    if assignment is None:
        assignment = _assignment(X, cfg)
    t1 = time.perf_counter()
    clusters = []
    fallbacks = 0
    for idx in assignment.groups():
        w, fell = interpolate_cluster(kernel, X[idx], y[idx])
        fallbacks += int(fell)
        clusters.append(RbfCluster(X[idx].copy(), w))
    if fallbacks:
        warnings.warn(f"{fallbacks} kernel matrix(es) singular; used pseudo-inverse",
                      SingularKernelWarning, stacklevel=2)
    t2 = time.perf_counter()
    O = global_matrix(kernel, clusters, X)
    v, rep = numerics.least_squares(O, y)
    t3 = time.perf_counter()

    net = RbfNet(kernel, clusters, v, norm, ds.n)
    net.info = {
        "neurons": len(clusters),
        "cluster": cfg.cluster,
        "local_fallbacks": fallbacks,
        "output_method": rep.method_used,
        "timings": {"cluster": t1 - t0, "local_solve": t2 - t1, "output_solve": t3 - t2},
        "config": cfg.__dict__.copy(),
    }
    net.info["train_mae"] = float(np.mean(np.abs(net.predict(X) - ds.y)))
    return net


def predict_rbf(net, X):
    return net.predict(X)


def predict_derivative(net, X, order, dim=0):
    """``order``-th partial derivative along input ``dim`` of the fitted function.

    Uses the fitted weights unchanged; when the net was trained on
    normalized targets the result is rescaled back to original units.
    """
    if order == 0:
        return net.predict(X)
    d = net.hidden(X, order, dim) @ net.v
    if net.norm is not None:
        d = d / net.norm.slope
    return d


def default_shape_grid(X, count=13):
    """Log-spaced shape parameters around the typical nearest-neighbour spacing."""
    X = np.asarray(X, dtype=float)
    h = typical_spacing(X)
    return h * np.logspace(-1, 2, count)


def typical_spacing(X, sample=2000, seed=0):
    """Median nearest-neighbour distance (on a subsample for large ``X``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] > sample:
        X = X[np.random.default_rng(seed).choice(X.shape[0], sample, replace=False)]
    from scipy.spatial import cKDTree

    dist, _ = cKDTree(X).query(X, k=2)
    return float(np.median(dist[:, 1]))


def select_shape(ds, cfg=None, grid=None, seed=0, val_fraction=0.2):
    """Pick ``c`` from ``grid`` by validation MAE on a held-out split.

    The training part is clustered once and the squared distances are
    reused across the grid. Returns ``(best_c, scores)`` where ``scores``
    maps each tried value to its validation MAE.
    """
    cfg = cfg or RbfConfig()
    train, val = split(ds, val_fraction, seed)
    if grid is None:
        grid = default_shape_grid(train.X)
    grid = [float(c) for c in grid]
    if cfg.kernel == "integrated_gaussian_2":
        scores = {}
        asg = _assignment(train.X, cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SingularKernelWarning)
            for c in grid:
                net = fit_rbf(train, replace(cfg, c=c), assignment=asg)
                scores[c] = float(np.mean(np.abs(net.predict(val.X) - val.y)))
        return min(scores, key=scores.get), scores

    from .kernels import _pairwise_sq, _profile

    y = train.y
    if cfg.normalize:
        y, norm = normalize_targets(train.y, cfg.lo, cfg.hi)
    groups = _assignment(train.X, cfg).groups()
    d_local = [_pairwise_sq(train.X[g], train.X[g]) for g in groups]
    d_train = [_pairwise_sq(train.X[g], train.X) for g in groups]
    d_val = [_pairwise_sq(train.X[g], val.X) for g in groups]
    scores = {}
    for c in grid:
        O = np.ones((train.m, len(groups) + 1))
        Ov = np.ones((val.m, len(groups) + 1))
        for k, g in enumerate(groups):
            w, _ = numerics.solve_square(_profile(cfg.kernel, c, d_local[k]), y[g])
            O[:, k] = _profile(cfg.kernel, c, d_train[k]) @ w
            Ov[:, k] = _profile(cfg.kernel, c, d_val[k]) @ w
        v, _ = numerics.least_squares(O, y)
        pred = Ov @ v
        if cfg.normalize:
            pred = norm.denormalize(pred)
        scores[c] = float(np.mean(np.abs(pred - val.y)))
    best = min(scores, key=scores.get)
    return best, scores
