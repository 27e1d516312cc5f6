"""Deep networks grown from shallow ones.

``deepen`` keeps the first layer of a fitted shallow net and adds layers
whose neurons are each solved by least squares against the inverted
activation of the targets, using the previous layer's activations as
features. ``stack_layers`` instead feeds a shallow net's hidden layer into a
fresh shallow fit, repeatedly.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics
from .dataset import Dataset, NormParams, normalize_targets
from .errors import ShapeMismatch, TooFewObservations
from .sigmoid_net import Activation, SigmoidConfig, fit


@dataclass(frozen=True)
class DeepConfig:
    lo: float = 0.4
    hi: float = 0.6
    jitter: float = 1e-3  # per-neuron target noise; keeps neurons of a layer distinct
    seed: int = 0


@dataclass(eq=False)
class DeepNet:
    """``layers[0]`` is (n+1) x N_1; ``layers[l]`` is (N_l + 1) x N_{l+1}."""

    layers: list
    v: np.ndarray
    activation: Activation
    norm: NormParams
    n_features: int
    info: dict = field(default_factory=dict, repr=False)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def hidden(self, X):
        """Activations of the last hidden layer."""
        H = np.asarray(X, dtype=float)
        if H.ndim == 1:
            H = H.reshape(-1, 1) if self.n_features == 1 else H.reshape(1, -1)
        if H.shape[1] != self.n_features:
            raise ShapeMismatch(f"model expects {self.n_features} features, got {H.shape[1]}")
        for W in self.layers:
            H = self.activation.forward(H @ W[:-1] + W[-1])
        return H

    def predict_scaled(self, X):
        H = self.hidden(X)
        return H @ self.v[:-1] + self.v[-1]

    def predict(self, X):
        return self.norm.denormalize(self.predict_scaled(X))


def _augment(H):
    return np.hstack([H, np.ones((H.shape[0], 1))])


def _lsq(A, T):
    if A.shape[0] >= A.shape[1]:
        x, rep = numerics.least_squares(A, T)
        return x, rep.method_used
    return numerics.solve_rectangular(A, T), numerics.PSEUDO_INVERSE


def deepen(net, ds, L, cfg=None):
    """Grow the shallow ``net`` (fitted on ``ds``) into ``L`` hidden layers."""
    cfg = cfg or DeepConfig()
    if L < 2:
        raise ValueError("a deep net needs L >= 2")
    a = net.activation
    y_s, norm = normalize_targets(ds.y, cfg.lo, cfg.hi)
    rng = np.random.default_rng(cfg.seed)

    t0 = time.perf_counter()
    layers = [np.array(net.W, dtype=float)]
    H = a.forward(ds.X @ net.W[:-1] + net.W[-1])
    methods = []
    for _ in range(1, L):
        N = H.shape[1]
        T = a.inverse(y_s[:, None] + cfg.jitter * rng.standard_normal((ds.m, N)))
        A = _augment(H)
        W, method = _lsq(A, T)
        methods.append(method)
        layers.append(W)
        H = a.forward(A @ W)
    v, method = _lsq(_augment(H), y_s)
    methods.append(method)

    deep = DeepNet(layers, v, a, norm, ds.n)
    deep.info = {"construction": "deepen", "layers": L,
                 "config": {**cfg.__dict__, "activation": a.kind},
                 "solve_methods": methods, "seconds": time.perf_counter() - t0}
    deep.info["train_mae"] = float(np.mean(np.abs(deep.predict(ds.X) - ds.y)))
    return deep


def stack_layers(ds, L, cfg=None, neurons=None, deep_cfg=None):
    """Fit a shallow net, then refit on its hidden activations ``L - 1`` times.

    The first layer follows ``cfg``. The later ones are fitted with targets
    in the ``deep_cfg`` range and k-means neighborhoods in activation space
    (balanced clusters of ``N + 1`` points would leave almost no neurons).
    ``neurons`` lists one width per layer; by default every layer keeps the
    first layer's width. A width larger than the row count raises
    ``TooFewObservations``.
    """
    cfg = cfg or SigmoidConfig()
    dcfg = deep_cfg or DeepConfig()
    if L < 2:
        raise ValueError("a deep net needs L >= 2")
    if neurons is not None and len(neurons) != L:
        raise ValueError("neurons must list one width per layer")
    t0 = time.perf_counter()
    layers = []
    feats = ds.X
    sub = None
    for l in range(L):
        if l == 0:
            c = cfg if neurons is None else replace(cfg, neurons=int(neurons[0]))
        else:
            width = sub.n_neurons if neurons is None else int(neurons[l])
            if width > ds.m:
                raise TooFewObservations(f"layer {l + 1} asks for {width} neurons "
                                         f"but only {ds.m} rows are available")
            c = replace(cfg, neurons=width, lo=dcfg.lo, hi=dcfg.hi,
                        cluster="kmeans" if cfg.cluster == "balanced" else cfg.cluster)
        sub = fit(Dataset(feats, ds.y), c)
        layers.append(sub.W)
        feats = sub.hidden(feats)[:, :-1]

    deep = DeepNet(layers, sub.v, sub.activation, sub.norm, ds.n)
    deep.info = {"construction": "stack", "layers": L, "config": cfg.__dict__.copy(),
                 "deep_config": dcfg.__dict__.copy(), "seconds": time.perf_counter() - t0}
    deep.info["train_mae"] = float(np.mean(np.abs(deep.predict(ds.X) - ds.y)))
    return deep


def predict_deep(net, X):
    return net.predict(X)
