"""Derivatives for free, and a meshless Laplace solve.

An RBF network's derivatives use the same weights as its values, only the
kernel is differentiated. Turning that around gives a collocation solver:
ask the differentiated network to satisfy the PDE at interior points and
the boundary data at boundary points.

Run:  python demos/02_derivatives_and_laplace.py
"""
import warnings

import numpy as np

from annbn import Dataset, RbfConfig, fit_rbf, predict_derivative
from annbn.errors import SingularKernelWarning
from annbn.pde import (apply_operator, laplace_exact, laplace_problem, laplacian_terms,
                       solve_pde)

warnings.simplefilter("ignore", SingularKernelWarning)

x = np.linspace(0, 1, 101)
net = fit_rbf(Dataset(x[:, None], x ** 3), RbfConfig("gaussian", c=0.3, cluster="single"))
q = np.array([[0.25], [0.5], [0.75]])
print("f = x^3 fitted from values only")
print("  f'  at 0.25, 0.5, 0.75:", np.round(predict_derivative(net, q, 1), 5), "exact", 3 * q[:, 0] ** 2)
print("  f'' at 0.25, 0.5, 0.75:", np.round(predict_derivative(net, q, 2), 4), "exact", 6 * q[:, 0])

for noise in (0.0, 0.1):
    prob = laplace_problem(dx=0.02, noise=noise, seed=0)
    sol = solve_pde(prob)
    pts = prob.all_points()
    err = np.mean(np.abs(sol.predict(pts) - laplace_exact(1, 1, 1, pts[:, 0], pts[:, 1])))
    lap = apply_operator(sol, laplacian_terms(2), prob.interior)
    print(f"Laplace, unit square, source U(0, {noise}): {prob.interior.shape[0]} interior points, "
          f"c = {sol.kernel.c:.3g}")
    print(f"  MAE vs closed form {err:.2e}, mean |laplacian - source| "
          f"{np.mean(np.abs(lap - prob.source)):.2e}")
