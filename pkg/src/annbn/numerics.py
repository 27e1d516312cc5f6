"""Dense linear-algebra kernels shared by every fitting path.

All functions are pure: they never modify their inputs and keep no state,
so they can be called from several threads at once.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NonFinite, ShapeMismatch

__all__ = [
    "SolveReport",
    "solve_square",
    "least_squares",
    "solve_normal_equations",
    "solve_rectangular",
]

DIRECT = "direct"
PSEUDO_INVERSE = "pseudo_inverse"

# relative pivot threshold; scaled by the largest absolute entry of the matrix
PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class SolveReport:
    """How a linear system was solved.

    ``condition_estimate`` is the ratio of the extreme pivot magnitudes of the
    factorization. It is cheap and usually within an order of magnitude or two
    of the true 2-norm condition number, but it is not a bound.
    """

    method_used: str
    condition_estimate: float
    max_residual: float

    @property
    def fell_back(self) -> bool:
        return self.method_used == PSEUDO_INVERSE


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFinite("input contains NaN or Inf")


def _default_tol(A, pivot_tol):
    if pivot_tol is not None:
        if pivot_tol <= 0:
            raise ValueError("pivot_tol must be positive")
        return pivot_tol
    return PIVOT_RTOL * (np.max(np.abs(A)) if A.size else 0.0)


def _residual(A, x, b):
    r = A @ x - b
    return float(np.max(np.abs(r))) if r.size else 0.0


def solve_square(A, b, pivot_tol=None):
    """Solve ``A x = b`` for square ``A``.

    LU with partial pivoting is tried first. If a pivot falls below
    ``pivot_tol`` (default ``1e-12 * max|A|``) the system is treated as
    singular and the minimum-norm least-squares solution is returned instead.

    Returns
    -------
    x : ndarray
    report : SolveReport
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_finite(A, b)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        x = solve_rectangular(A, b)
        return x, SolveReport(PSEUDO_INVERSE, np.inf, _residual(A, x, b))
    if b.shape[0] != A.shape[0]:
        raise ShapeMismatch(f"A is {A.shape}, b has {b.shape[0]} rows")
    tol = _default_tol(A, pivot_tol)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    pmin = pivots.min() if pivots.size else 0.0
    if pivots.size and pmin > tol:
        x = sla.lu_solve((lu, piv), b, check_finite=False)
        cond = float(pivots.max() / pmin)
        return x, SolveReport(DIRECT, cond, _residual(A, x, b))

    x = solve_rectangular(A, b)
    cond = float(pivots.max() / pmin) if pmin > 0 else np.inf
    return x, SolveReport(PSEUDO_INVERSE, cond, _residual(A, x, b))


def solve_normal_equations(G, rhs, pivot_tol=None):
    """Solve ``G x = rhs`` for a symmetric positive semi-definite Gram matrix.

    Cholesky is used when every pivot clears ``pivot_tol`` (default
    ``1e-12 * max|G|``); otherwise the eigen-decomposition pseudo-inverse is
    used, which gives the minimum-norm least-squares solution.

    Returns ``(x, method_used, condition_estimate)``.
    """
    G = np.asarray(G, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    tol = _default_tol(G, pivot_tol)
    try:
        c, low = sla.cho_factor(G, lower=True, check_finite=False)
        d = np.diag(c) ** 2
        if d.size and d.min() > tol:
            x = sla.cho_solve((c, low), rhs, check_finite=False)
            # one step of iterative refinement tightens the normal-equation residual
            x = x + sla.cho_solve((c, low), rhs - G @ x, check_finite=False)
            return x, DIRECT, float(d.max() / d.min())
    except np.linalg.LinAlgError:
        pass
    x = sla.pinvh(G, check_finite=False) @ rhs
    return x, PSEUDO_INVERSE, np.inf


def least_squares(A, b, pivot_tol=None):
    """Minimize ``||A x - b||_2`` through the normal equations.

    ``(A^T A) x = A^T b`` is solved by Cholesky. When the Gram matrix fails
    the pivot test, a rank-revealing SVD solve on ``A`` itself is used.
    ``b`` may be a vector or a matrix of right-hand sides.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_finite(A, b)
    if A.ndim != 2 or b.shape[0] != A.shape[0]:
        raise ShapeMismatch(f"A is {A.shape}, b is {b.shape}")
    if A.shape[0] < A.shape[1]:
        raise ShapeMismatch("least_squares needs at least as many rows as columns")

    G = A.T @ A
    rhs = A.T @ b
    tol = _default_tol(G, pivot_tol)
    try:
        c, low = sla.cho_factor(G, lower=True, check_finite=False)
        d = np.diag(c) ** 2
        ok = d.size > 0 and d.min() > tol
    except np.linalg.LinAlgError:
        ok = False
    if ok:
        x = sla.cho_solve((c, low), rhs, check_finite=False)
        x = x + sla.cho_solve((c, low), A.T @ (b - A @ x), check_finite=False)
        return x, SolveReport(DIRECT, float(d.max() / d.min()), _residual(A, x, b))

    x = solve_rectangular(A, b)
    return x, SolveReport(PSEUDO_INVERSE, np.inf, _residual(A, x, b))


def solve_rectangular(A, b):
    """Minimum-norm least-squares solution of ``A x = b`` for any shape of ``A``.

    This is the pseudo-inverse solution with the free parameters set to zero.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_finite(A, b)
    if A.ndim != 2 or b.shape[0] != A.shape[0]:
        raise ShapeMismatch(f"A is {A.shape}, b is {b.shape}")
    if A.size == 0:
        return np.zeros((A.shape[1],) + b.shape[1:])
    x, *_ = sla.lstsq(A, b, lapack_driver="gelsd", check_finite=False)
    return x
