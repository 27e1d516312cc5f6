"""Shallow sigmoidal networks trained neighborhood by neighborhood.

Each hidden neuron is fitted on one cluster of observations: the targets are
pushed through the inverse activation, which turns the neuron's fit into the
linear system ``[X_k | 1] (w, b) = act^-1(y_k)``. The output layer is then a
single least-squares problem over the whole sample.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import numerics
from .clustering import ascending_partition, balance, default_neuron_count, kmeans
from .dataset import NormParams, normalize_targets
from .errors import ConstantTarget, RankDeficientWarning, ShapeMismatch

ACTIVATIONS = ("logistic", "erf")
CLUSTER_MODES = ("kmeans", "balanced", "ascending")

# O is built in row blocks once m * (N + 1) exceeds this many entries
_DENSE_LIMIT = 20_000_000
_ROW_BLOCK = 8192


@dataclass(frozen=True)
class Activation:
    """Sigmoidal activation with a clamped inverse.

    ``erf`` is rescaled to ``(1 + erf(x)) / 2`` so both kinds map onto
    ``(0, 1)`` and share the same target normalization.
    """

    kind: str = "logistic"
    clamp_eps: float = 1e-6

    def __post_init__(self):
        if self.kind not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.kind!r}; choose from {ACTIVATIONS}")
        if not 0.0 < self.clamp_eps < 0.5:
            raise ValueError("clamp_eps must lie in (0, 0.5)")

    def forward(self, x):
        if self.kind == "logistic":
            return special.expit(x)
        return 0.5 * (1.0 + special.erf(x))

    def inverse(self, y):
        y = np.clip(y, self.clamp_eps, 1.0 - self.clamp_eps)
        if self.kind == "logistic":
            return special.logit(y)
        return special.erfinv(2.0 * y - 1.0)


def activation_forward(a, x):
    return a.forward(x)


def activation_inverse(a, y):
    return a.inverse(y)


@dataclass(frozen=True)
class SigmoidConfig:
    activation: str = "logistic"
    clamp_eps: float = 1e-6
    neurons: int | None = None  # None -> floor(m / (n + 1))
    cluster: str = "kmeans"
    lo: float = 0.1
    hi: float = 0.9
    seed: int = 0
    max_iter: int = 100

    def __post_init__(self):
        if self.cluster not in CLUSTER_MODES:
            raise ValueError(f"unknown cluster mode {self.cluster!r}; choose from {CLUSTER_MODES}")

    @property
    def act(self) -> Activation:
        return Activation(self.activation, self.clamp_eps)


@dataclass(eq=False)
class SigmoidNet:
    """``W`` is (n+1) x N with column k = (w_k, b_k); ``v`` is (v_1..v_N, b_0)."""

    W: np.ndarray
    v: np.ndarray
    activation: Activation
    norm: NormParams
    n_features: int
    info: dict = field(default_factory=dict, repr=False)

    @property
    def n_neurons(self) -> int:
        return self.W.shape[1]

    def hidden(self, X):
        return assemble_output_matrix(X, self.W, self.activation)

    def predict_scaled(self, X):
        X = _as_matrix(X, self.n_features)
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], _ROW_BLOCK):
            out[s:s + _ROW_BLOCK] = self.hidden(X[s:s + _ROW_BLOCK]) @ self.v
        return out

    def predict(self, X):
        return self.norm.denormalize(self.predict_scaled(X))


def _as_matrix(X, n_features=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if n_features == 1 else X.reshape(1, -1)
    if n_features is not None and X.shape[1] != n_features:
        raise ShapeMismatch(f"model expects {n_features} features, got {X.shape[1]}")
    return X


def _augment(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def fit_local_weights(X_k, y_k, a, return_report=False):
    """Weights of one neuron from its cluster.

    ``y_k`` must already be scaled into ``(0, 1)``; it may also be a matrix
    with one column per target, which yields one weight column each.
    Square clusters (``m_k = n + 1``) use a direct solve, any other size the
    minimum-norm least-squares solution.
    """
    X_k = np.atleast_2d(np.asarray(X_k, dtype=float))
    A = _augment(X_k)
    t = a.inverse(np.asarray(y_k, dtype=float))
    if A.shape[0] == A.shape[1]:
        sol, rep = numerics.solve_square(A, t)
        fell_back = rep.fell_back
    else:
        sol = numerics.solve_rectangular(A, t)
        fell_back = False
    w, b = sol[:-1], sol[-1]
    if return_report:
        return w, b, fell_back
    return w, b


def assemble_output_matrix(X, W, a):
    """Hidden activations for every row of ``X`` plus a trailing ones column."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    W = np.asarray(W, dtype=float)
    if W.shape[0] != X.shape[1] + 1:
        raise ShapeMismatch(f"W has {W.shape[0]} rows, expected {X.shape[1] + 1}")
    H = a.forward(X @ W[:-1] + W[-1])
    return np.hstack([H, np.ones((X.shape[0], 1))])


def partition(X, cfg, N):
    """Neighborhoods for ``N`` neurons according to ``cfg.cluster``."""
    m, n = X.shape
    if cfg.cluster == "ascending":
        return ascending_partition(m, max(m // N, 1))
    asg = kmeans(X, N, seed=cfg.seed, max_iter=cfg.max_iter)
    if cfg.cluster == "balanced":
        asg = balance(X, asg, n + 1)
    return asg


def local_weights(X, T, assignment, a):
    """Solve every cluster's local system.

    ``T`` holds scaled targets, one column per output (or a vector). Returns
    the weight array of shape (n+1, N) or (n+1, N, C) and the number of
    clusters that needed the pseudo-inverse fallback.
    """
    groups = assignment.groups()
    multi = T.ndim == 2
    shape = (X.shape[1] + 1, len(groups)) + ((T.shape[1],) if multi else ())
    W = np.empty(shape)
    fallbacks = 0
    for k, idx in enumerate(groups):
        w, b, fell = fit_local_weights(X[idx], T[idx], a, return_report=True)
        W[:-1, k] = w
        W[-1, k] = b
        fallbacks += int(fell)
    if fallbacks:
        warnings.warn(f"{fallbacks} cluster(s) were rank deficient; used pseudo-inverse",
                      RankDeficientWarning, stacklevel=3)
    return W, fallbacks


def output_weights(X, W, a, y_scaled):
    """Least-squares output layer; returns ``(v, method_used)``."""
    m, N1 = X.shape[0], W.shape[1] + 1
    if m * N1 <= _DENSE_LIMIT:
        O = assemble_output_matrix(X, W, a)
        v, rep = numerics.least_squares(O, y_scaled)
        return v, rep.method_used
    G = np.zeros((N1, N1))
    r = np.zeros(N1)
    for s in range(0, m, _ROW_BLOCK):
        O = assemble_output_matrix(X[s:s + _ROW_BLOCK], W, a)
        G += O.T @ O
        r += O.T @ y_scaled[s:s + _ROW_BLOCK]
    v, method, _ = numerics.solve_normal_equations(G, r)
    return v, method


def fit(ds, cfg=None, assignment=None):
    """Train a shallow network on ``ds``.

    ``assignment`` overrides the clustering step (its cluster count then
    fixes the number of neurons). The returned net carries an ``info`` dict
    with the training MAE in original units, per-phase timings and the
    resolved configuration.
    """
    cfg = cfg or SigmoidConfig()
    a = cfg.act
    X = ds.X
    y_scaled, norm = normalize_targets(ds.y, cfg.lo, cfg.hi)

    t0 = time.perf_counter()
    if assignment is None:
        N = cfg.neurons or default_neuron_count(ds.m, ds.n)
        assignment = partition(X, cfg, N)
    t1 = time.perf_counter()
    W, fallbacks = local_weights(X, y_scaled, assignment, a)
    t2 = time.perf_counter()
    v, method = output_weights(X, W, a, y_scaled)
    t3 = time.perf_counter()

    net = SigmoidNet(W, v, a, norm, ds.n)
    net.info = {
        "neurons": int(W.shape[1]),
        "cluster": cfg.cluster,
        "cluster_sizes_min": int(assignment.sizes.min()),
        "cluster_sizes_max": int(assignment.sizes.max()),
        "local_fallbacks": fallbacks,
        "output_method": method,
        "timings": {"cluster": t1 - t0, "local_solve": t2 - t1, "output_solve": t3 - t2},
        "config": cfg.__dict__.copy(),
    }
    net.info["train_mae"] = float(np.mean(np.abs(net.predict(X) - ds.y)))
    return net


def predict(net, X):
    return net.predict(X)


def _class_norm(eps):
    # targets are exactly 0/1, so the affine map is fixed by eps alone
    return NormParams(0.0, 1.0, eps, 1.0 - eps)


def fit_classifier(ds, cfg=None, eps=0.01, classes=None):
    """One binary network per class (one-vs-rest), all on a shared partition.

    Targets ``1{y = c}`` are mapped to ``[eps, 1 - eps]``; ``eps = 0`` leaves
    them at 0/1 and relies on the activation's clamp.
    """
    cfg = cfg or SigmoidConfig()
    labels = np.asarray(ds.y)
    if classes is None:
        classes = np.unique(labels)
    classes = np.asarray(classes, dtype=float)
    if np.unique(labels).size < 2:
        raise ConstantTarget("classification needs at least two distinct labels")
    if not 0.0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 0.5)")

    a = cfg.act
    norm = _class_norm(eps)
    T = norm.normalize((labels[:, None] == classes[None, :]).astype(float))

    t0 = time.perf_counter()
    N = cfg.neurons or default_neuron_count(ds.m, ds.n)
    assignment = partition(ds.X, cfg, N)
    t1 = time.perf_counter()
    W_all, fallbacks = local_weights(ds.X, T, assignment, a)
    t2 = time.perf_counter()

    nets = []
    for c, cls in enumerate(classes):
        s = time.perf_counter()
        W = np.ascontiguousarray(W_all[:, :, c])
        v, method = output_weights(ds.X, W, a, T[:, c])
        net = SigmoidNet(W, v, a, norm, ds.n)
        net.info = {
            "label": float(cls),
            "neurons": int(W.shape[1]),
            "local_fallbacks": fallbacks,
            "output_method": method,
            "timings": {"cluster": t1 - t0, "local_solve": t2 - t1,
                        "output_solve": time.perf_counter() - s},
            "config": {**cfg.__dict__, "eps": eps},
        }
        nets.append(net)
    return nets


def class_scores(nets, X):
    return np.column_stack([net.predict(X) for net in nets])


def classify(nets, X):
    """Label of the highest-scoring class network (first one on ties)."""
    labels = np.array([net.info.get("label", k) for k, net in enumerate(nets)])
    return labels[np.argmax(class_scores(nets, X), axis=1)]


def binary_accuracy(net, X, y, label):
    """Percent of rows where ``score >= 0.5`` agrees with ``y == label``."""
    pred = net.predict(X) >= 0.5
    return 100.0 * float(np.mean(pred == (np.asarray(y) == label)))
