"""Radial kernels and their closed-form partial derivatives.

Every kernel is written in terms of the squared distance
``d = sum_p (x_jp - x_p)**2`` between a collocation point ``x_j`` and an
evaluation point ``x``. Derivatives are taken with respect to ``x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ShapeMismatch, UnsupportedDimension, UnsupportedOrder

KERNELS = ("gaussian", "multiquadric", "quartic_polyharmonic", "integrated_gaussian_2")
MAX_ORDER = 2


@dataclass(frozen=True)
class Kernel:
    kind: str = "gaussian"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {KERNELS}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError("shape parameter c must be positive and finite")

    def check_dimension(self, n):
        if self.kind == "integrated_gaussian_2" and n != 1:
            raise UnsupportedDimension("integrated_gaussian_2 is defined for one input only")


def distance_sq(x_j, x):
    x_j = np.asarray(x_j, dtype=float)
    x = np.asarray(x, dtype=float)
    if x_j.shape != x.shape:
        raise ShapeMismatch(f"points have shapes {x_j.shape} and {x.shape}")
    return float(np.sum((x_j - x) ** 2))


def _pairwise_sq(centers, points):
    # direct differences keep coincident points at exactly zero
    if centers.shape[1] <= 3:
        d = np.zeros((points.shape[0], centers.shape[0]))
        for p in range(centers.shape[1]):
            u = points[:, p][:, None] - centers[:, p][None, :]
            d += u * u
        return d
    d = (np.sum(points ** 2, axis=1)[:, None] - 2.0 * points @ centers.T
         + np.sum(centers ** 2, axis=1)[None, :])
    np.maximum(d, 0.0, out=d)
    return d


def _profile(kind, c, d, u=None):
    """Kernel value from squared distance (and signed 1D offset for IRBF)."""
    if kind == "gaussian":
        return np.exp(-d / c ** 2)
    if kind == "multiquadric":
        return np.sqrt(1.0 + c ** 2 * d)
    if kind == "quartic_polyharmonic":
        return -(d ** 4) / 4.0
    return 0.5 * (c ** 2 * np.exp(-d / c ** 2) + c * math.sqrt(math.pi) * u * special.erf(u / c))


def kernel_matrix(k, centers, points):
    """``Phi[i, j] = phi(x_j, x_i)`` for evaluation rows ``points`` and columns ``centers``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if centers.shape[1] != points.shape[1]:
        raise ShapeMismatch("centers and points differ in dimension")
    k.check_dimension(points.shape[1])
    if k.kind == "integrated_gaussian_2":
        u = points[:, :1] - centers[:, 0][None, :]
        return _profile(k.kind, k.c, u * u, u)
    return _profile(k.kind, k.c, _pairwise_sq(centers, points))


def derivative_matrix(k, centers, points, order, dim):
    """``d^order phi(x_j, x_i) / d x_i[dim]^order`` for all pairs.

    ``order = 0`` returns :func:`kernel_matrix`.
    """
    if order == 0:
        return kernel_matrix(k, centers, points)
    if order not in (1, 2):
        raise UnsupportedOrder(f"derivative order {order} not supported (max {MAX_ORDER})")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[1]
    if centers.shape[1] != n:
        raise ShapeMismatch("centers and points differ in dimension")
    k.check_dimension(n)
    if not 0 <= dim < n:
        raise UnsupportedDimension(f"dimension {dim} out of range for {n} inputs")

    c = k.c
    # signed offset along dim; d/dx_p of the squared distance is 2u
    u = points[:, dim][:, None] - centers[:, dim][None, :]
    if k.kind == "integrated_gaussian_2":
        if order == 1:
            return 0.5 * c * math.sqrt(math.pi) * special.erf(u / c)
        return np.exp(-(u * u) / c ** 2)

    d = _pairwise_sq(centers, points)
    if k.kind == "gaussian":
        phi = np.exp(-d / c ** 2)
        if order == 1:
            return phi * (-2.0 * u / c ** 2)
        return phi * (4.0 * u * u / c ** 4 - 2.0 / c ** 2)
    if k.kind == "multiquadric":
        phi = np.sqrt(1.0 + c ** 2 * d)
        if order == 1:
            return c ** 2 * u / phi
        return c ** 2 / phi - c ** 4 * u * u / phi ** 3
    # quartic: phi = -d^4/4, dphi/dd = -d^3, d2phi/dd2 = -3 d^2
    if order == 1:
        return -2.0 * u * d ** 3
    return -2.0 * d ** 3 - 12.0 * u * u * d ** 2


def kernel_eval(k, x_j, x):
    x_j = np.atleast_1d(np.asarray(x_j, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x_j.shape != x.shape:
        raise ShapeMismatch(f"points have shapes {x_j.shape} and {x.shape}")
    k.check_dimension(x.size)
    u = x[0] - x_j[0]
    return float(_profile(k.kind, k.c, distance_sq(x_j, x), u))


def kernel_derivative(k, x_j, x, order, dim):
    x_j = np.atleast_1d(np.asarray(x_j, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x_j.shape != x.shape:
        raise ShapeMismatch(f"points have shapes {x_j.shape} and {x.shape}")
    return float(derivative_matrix(k, x_j[None, :], x[None, :], order, dim)[0, 0])
