"""Inverse-error weighted ensembles over random subsamples."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch

ERROR_FLOOR = 1e-12


@dataclass(eq=False)
class Ensemble:
    members: list
    fold_errors: np.ndarray
    alpha: float
    info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.fold_errors = np.maximum(np.asarray(self.fold_errors, dtype=float), ERROR_FLOOR)
        if len(self.members) < 1 or self.fold_errors.size != len(self.members):
            raise ShapeMismatch("an ensemble needs one fold error per member (at least one)")

    @property
    def n_features(self) -> int:
        return self.members[0].n_features

    @property
    def weights(self):
        inv = 1.0 / self.fold_errors
        return inv / inv.sum()

    def predict(self, X):
        preds = np.column_stack([m.predict(X) for m in self.members])
        return preds @ self.weights


def _fitter(cfg):
    from .rbf_net import RbfConfig, fit_rbf
    from .sigmoid_net import SigmoidConfig, fit

    if isinstance(cfg, RbfConfig):
        return fit_rbf
    if cfg is None or isinstance(cfg, SigmoidConfig):
        return fit
    raise TypeError(f"no fitter for config of type {type(cfg).__name__}")


def fit_ensemble(ds, cfg=None, n_f=10, alpha=0.8, seed=0, fitter=None):
    """Fit ``n_f`` members on seeded subsamples of ``ceil(alpha * m)`` rows.

    ``cfg`` is a ``SigmoidConfig`` or ``RbfConfig`` (``fitter`` overrides the
    choice of training function). Each member's error is its MAE on the rows
    it did not see, or on the full sample when ``alpha = 1``.
    """
    if n_f < 1:
        raise ValueError("n_f must be at least 1")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    fitter = fitter or _fitter(cfg)
    rng = np.random.default_rng(seed)
    size = math.ceil(alpha * ds.m)
    members, errors, folds = [], [], []
    for _ in range(n_f):
        perm = rng.permutation(ds.m)
        inside, outside = np.sort(perm[:size]), np.sort(perm[size:])
        net = fitter(ds.take(inside), cfg)
        held = ds.take(outside) if outside.size else ds
        errors.append(float(np.mean(np.abs(net.predict(held.X) - held.y))))
        members.append(net)
        folds.append(int(outside.size))
    ens = Ensemble(members, np.array(errors), alpha)
    ens.info = {"n_f": n_f, "alpha": alpha, "seed": seed, "subsample": size,
                "held_out": folds}
    return ens


def predict_ensemble(ens, X):
    return ens.predict(X)
