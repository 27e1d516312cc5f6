"""Meshless collocation of linear PDEs with RBF networks by neighborhoods.

The unknown function is written as an RBF network. Applying the operator to
the kernel (not to the weights) turns ``T f = h`` at interior points and the
boundary conditions at boundary points into one linear system per cluster.
A global least-squares layer then combines the cluster solutions.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .clustering import ascending_partition, kmeans
from .errors import NullspaceWarning, ParseError, ShapeMismatch
from .kernels import Kernel, derivative_matrix
from .rbf_net import RbfCluster, RbfNet, typical_spacing


@dataclass(frozen=True)
class OperatorTerm:
    """``coefficient(x) * d^order f / d x[dim]^order``.

    ``coefficient`` is a constant or a callable mapping a (q, n) array of
    points to q values.
    """

    coefficient: object = 1.0
    order: int = 0
    dim: int = 0

    def coef(self, points):
        if callable(self.coefficient):
            return np.asarray(self.coefficient(points), dtype=float).reshape(-1)
        return np.full(points.shape[0], float(self.coefficient))


@dataclass(frozen=True)
class BoundaryCondition:
    """``d^order f / d x[dim]^order = values`` at ``points`` (order 0: plain values)."""

    points: np.ndarray
    values: np.ndarray
    order: int = 0
    dim: int = 0


@dataclass
class PdeProblem:
    terms: list
    interior: np.ndarray
    source: np.ndarray
    boundary: list = field(default_factory=list)
    kernel: Kernel | None = None

    def __post_init__(self):
        self.interior = np.atleast_2d(np.asarray(self.interior, dtype=float))
        self.source = np.asarray(self.source, dtype=float).reshape(-1)
        if self.source.size != self.interior.shape[0]:
            raise ShapeMismatch("one source value is needed per interior point")
        bcs = []
        for bc in self.boundary:
            pts = np.atleast_2d(np.asarray(bc.points, dtype=float))
            vals = np.asarray(bc.values, dtype=float).reshape(-1)
            if pts.shape[1] != self.dim or vals.size != pts.shape[0]:
                raise ShapeMismatch("boundary points/values do not match the problem")
            bcs.append(BoundaryCondition(pts, vals, bc.order, bc.dim))
        self.boundary = bcs
        if self.kernel is None:
            self.kernel = Kernel("gaussian", default_shape(self.all_points()))

    @property
    def dim(self) -> int:
        return self.interior.shape[1]

    def boundary_points(self):
        if not self.boundary:
            return np.empty((0, self.dim))
        return np.vstack([bc.points for bc in self.boundary])

    def boundary_values(self):
        if not self.boundary:
            return np.empty(0)
        return np.concatenate([bc.values for bc in self.boundary])

    def all_points(self):
        return np.vstack([self.interior, self.boundary_points()])


@dataclass(frozen=True)
class PdeConfig:
    neurons: int = 1
    cluster: str = "kmeans"
    seed: int = 0
    boundary_weight: float = 1.0
    max_iter: int = 100


SHAPE_FACTOR = 5.0


def default_shape(points):
    """``SHAPE_FACTOR`` times the median nearest-neighbour spacing of the points.

    Narrower Gaussians (around twice the spacing) leave the collocation
    system too local to carry the boundary data into the interior.
    """
    points = np.atleast_2d(points)
    h = typical_spacing(points) if points.shape[0] > 1 else 0.0
    return SHAPE_FACTOR * h if h > 0 and np.isfinite(h) else 1.0


def assemble_operator_rows(terms, kernel, centers, points):
    """Rows of ``T phi_j`` at ``points`` for the kernels centred on ``centers``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    A = np.zeros((points.shape[0], centers.shape[0]))
    for t in terms:
        A += t.coef(points)[:, None] * derivative_matrix(kernel, centers, points, t.order, t.dim)
    return A


def _boundary_rows(problem, centers):
    if not problem.boundary:
        return np.empty((0, centers.shape[0]))
    return np.vstack([derivative_matrix(problem.kernel, centers, bc.points, bc.order, bc.dim)
                      for bc in problem.boundary])


def _constant_response(problem):
    """What the operator and boundary rows give when applied to ``f = 1``."""
    interior = np.zeros(problem.interior.shape[0])
    for t in problem.terms:
        if t.order == 0:
            interior += t.coef(problem.interior)
    bnd = [np.full(bc.points.shape[0], 1.0 if bc.order == 0 else 0.0) for bc in problem.boundary]
    return np.concatenate([interior] + bnd)


def solve_pde(problem, cfg=None):
    """Solve ``problem`` and return the solution as an :class:`RbfNet`.

    Interior points are clustered; each cluster stacks its operator rows
    over the (replicated) boundary rows and is solved in the minimum-norm
    least-squares sense (a square system, as with no boundary rows, is solved
    directly like an interpolation matrix). The output layer is then fitted over every interior
    and boundary row.
    """
    cfg = cfg or PdeConfig()
    if not problem.boundary and not any(t.order == 0 for t in problem.terms):
        warnings.warn("no boundary conditions: the solution is fixed only up to the "
                      "operator's nullspace", NullspaceWarning, stacklevel=2)
    kernel = problem.kernel
    kernel.check_dimension(problem.dim)
    P = problem.interior
    h = problem.source
    yb = problem.boundary_values()
    wb = cfg.boundary_weight

    t0 = time.perf_counter()
    N = max(1, min(cfg.neurons, P.shape[0]))
    if N == 1:
        assignment = ascending_partition(P.shape[0], P.shape[0])
    elif cfg.cluster == "ascending":
        assignment = ascending_partition(P.shape[0], P.shape[0] // N)
    else:
        assignment = kmeans(P, N, seed=cfg.seed, max_iter=cfg.max_iter)
    t1 = time.perf_counter()

    clusters = []
    for idx in assignment.groups():
        C = P[idx]
        A = np.vstack([assemble_operator_rows(problem.terms, kernel, C, C),
                       wb * _boundary_rows(problem, C)])
        rhs = np.concatenate([h[idx], wb * yb])
        if A.shape[0] == A.shape[1]:
            w, _ = numerics.solve_square(A, rhs)
        else:
            w = numerics.solve_rectangular(A, rhs)
        clusters.append(RbfCluster(C.copy(), w))
    t2 = time.perf_counter()

    O = np.empty((P.shape[0] + yb.size, len(clusters) + 1))
    for k, cl in enumerate(clusters):
        O[:P.shape[0], k] = assemble_operator_rows(problem.terms, kernel, cl.centers, P) @ cl.w
        O[P.shape[0]:, k] = _boundary_rows(problem, cl.centers) @ cl.w
    O[:, -1] = _constant_response(problem)
    O[P.shape[0]:] *= wb
    rhs = np.concatenate([h, wb * yb])
    if O.shape[0] >= O.shape[1]:
        v, rep = numerics.least_squares(O, rhs)
        method = rep.method_used
    else:
        v, method = numerics.solve_rectangular(O, rhs), numerics.PSEUDO_INVERSE
    t3 = time.perf_counter()

    net = RbfNet(kernel, clusters, v, None, problem.dim)
    net.info = {
        "neurons": len(clusters),
        "kernel": kernel.kind,
        "c": kernel.c,
        "output_method": method,
        "timings": {"cluster": t1 - t0, "local_solve": t2 - t1, "output_solve": t3 - t2},
        "config": cfg.__dict__.copy(),
    }
    return net


def apply_operator(net, terms, points):
    """``T f`` of the fitted network at ``points``."""
    from .rbf_net import predict_derivative

    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(points.shape[0])
    for t in terms:
        out += t.coef(points) * predict_derivative(net, points, t.order, t.dim)
    return out


def pde_residual(net, problem, points=None, source=None):
    """``T f - h``; defaults to the problem's interior points and source."""
    if points is None:
        points, source = problem.interior, problem.source
    if source is None:
        raise ValueError("source values are required with custom points")
    return apply_operator(net, problem.terms, points) - np.asarray(source, dtype=float)


# --- the rectangle Laplace benchmark ---------------------------------------

def laplace_exact(a, b, f0, x, y):
    """Harmonic function on ``[0, a] x [0, b]`` equal to ``f0 sin(pi x / a)`` on the top edge."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = np.pi / a
    return f0 / np.sinh(k * b) * np.sin(k * x) * np.sinh(k * y)


def laplacian_terms(n=2):
    return [OperatorTerm(1.0, 2, p) for p in range(n)]


def rectangle_grid(a, b, dx, dy):
    """Interior and boundary nodes of a uniform grid on ``[0, a] x [0, b]``."""
    nx = int(round(a / dx))
    ny = int(round(b / dy))
    xs = np.linspace(0.0, a, nx + 1)
    ys = np.linspace(0.0, b, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    on_edge = ((np.isclose(pts[:, 0], 0.0)) | (np.isclose(pts[:, 0], a))
               | (np.isclose(pts[:, 1], 0.0)) | (np.isclose(pts[:, 1], b)))
    return pts[~on_edge], pts[on_edge]


def laplace_problem(a=1.0, b=1.0, f0=1.0, dx=0.02, dy=None, noise=0.0, seed=0, kernel=None):
    """Laplace (or Poisson with ``U(0, noise)`` source) on the rectangle.

    Boundary values: zero on three edges and ``f0 sin(pi x / a)`` on ``y = b``.
    """
    dy = dx if dy is None else dy
    interior, bnd = rectangle_grid(a, b, dx, dy)
    if noise > 0:
        source = np.random.default_rng(seed).uniform(0.0, noise, interior.shape[0])
    else:
        source = np.zeros(interior.shape[0])
    values = laplace_exact(a, b, f0, bnd[:, 0], bnd[:, 1])
    # the closed form is exact on the edges up to rounding; pin the zero edges
    values[~np.isclose(bnd[:, 1], b)] = 0.0
    return PdeProblem(laplacian_terms(2), interior, source,
                      [BoundaryCondition(bnd, values)], kernel)


# --- problem files -----------------------------------------------------------

PROBLEM_MAGIC = "annbn-pde"
PROBLEM_VERSION = 1


def _coefficient(token, dim, line):
    if token.startswith("x") and token[1:].isdigit():
        j = int(token[1:])
        if j >= dim:
            raise ParseError(f"coefficient {token} refers to a missing coordinate", line=line)
        return _Coordinate(j)
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"unknown coefficient {token!r}", line=line) from None


@dataclass(frozen=True)
class _Coordinate:
    index: int

    def __call__(self, points):
        return points[:, self.index]


def _floats(tokens, line):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ParseError("expected numbers", line=line) from None


def parse_problem(text, overrides=None, kernel=None):
    """Parse a problem description; returns ``(problem, exact)``.

    ``overrides`` replaces options of a ``builtin`` line (for example
    ``{"noise": 0.1}``) and ``kernel`` replaces any ``kernel`` line.

    ``exact`` is a dict naming a closed-form solution (``laplace_rect``
    problems) or ``None``. Line format::

        annbn-pde 1
        builtin laplace_rect a=1 b=1 f0=1 dx=0.02 [dy=..] [noise=..] [seed=..]
        dim <n>
        term <coefficient> <order> <dim>     coefficient: number or x0, x1, ...
        interior <x_0> ... <x_{n-1}> <source>
        boundary <order> <dim> <x_0> ... <x_{n-1}> <value>
        kernel <kind> <c>

    ``#`` starts a comment. A ``builtin`` line replaces dim/term/interior/
    boundary lines; ``kernel`` may accompany either form.
    """
    lines = text.splitlines()
    body = [(i + 1, ln.split("#", 1)[0].split()) for i, ln in enumerate(lines)]
    body = [(i, t) for i, t in body if t]
    if not body or body[0][1][:1] != [PROBLEM_MAGIC]:
        raise ParseError(f"missing '{PROBLEM_MAGIC} <version>' header", line=1)
    i0, head = body[0]
    if len(head) != 2 or not head[1].isdigit():
        raise ParseError("bad header", line=i0)
    if int(head[1]) > PROBLEM_VERSION:
        raise ParseError(f"problem format version {head[1]} is not supported", line=i0)

    dim = None
    builtin = None
    kernel_line = None
    terms, interior, source = [], [], []
    bnd = {}
    for line, tok in body[1:]:
        key, args = tok[0], tok[1:]
        if key == "builtin":
            if not args or args[0] != "laplace_rect":
                raise ParseError(f"unknown builtin {' '.join(args)!r}", line=line)
            opts = {}
            for a in args[1:]:
                k, eq, v = a.partition("=")
                if not eq or k not in ("a", "b", "f0", "dx", "dy", "noise", "seed"):
                    raise ParseError(f"bad builtin option {a!r}", line=line)
                try:
                    opts[k] = int(v) if k == "seed" else float(v)
                except ValueError:
                    raise ParseError(f"bad value in {a!r}", line=line) from None
            builtin = opts
        elif key == "dim":
            if len(args) != 1 or not args[0].isdigit() or int(args[0]) < 1:
                raise ParseError("dim takes one positive integer", line=line)
            dim = int(args[0])
        elif key == "kernel":
            if len(args) != 2:
                raise ParseError("kernel takes a kind and a shape value", line=line)
            try:
                kernel_line = Kernel(args[0], _floats(args[1:], line)[0])
            except ValueError as e:
                raise ParseError(str(e), line=line) from None
        elif key in ("term", "interior", "boundary"):
            if dim is None:
                raise ParseError(f"'{key}' before 'dim'", line=line)
            if key == "term":
                if len(args) != 3 or not args[1].isdigit() or not args[2].isdigit():
                    raise ParseError("term takes <coefficient> <order> <dim>", line=line)
                terms.append(OperatorTerm(_coefficient(args[0], dim, line),
                                          int(args[1]), int(args[2])))
            elif key == "interior":
                if len(args) != dim + 1:
                    raise ParseError(f"interior rows need {dim + 1} numbers", line=line)
                v = _floats(args, line)
                interior.append(v[:-1])
                source.append(v[-1])
            else:
                if len(args) != dim + 3 or not args[0].isdigit() or not args[1].isdigit():
                    raise ParseError(f"boundary rows need <order> <dim> and {dim + 1} numbers",
                                     line=line)
                v = _floats(args[2:], line)
                bnd.setdefault((int(args[0]), int(args[1])), []).append(v)
        else:
            raise ParseError(f"unknown keyword {key!r}", line=line)

    kernel = kernel or kernel_line
    if builtin is not None:
        opts = {"a": 1.0, "b": 1.0, "f0": 1.0, "dx": 0.02, **builtin, **(overrides or {})}
        prob = laplace_problem(kernel=kernel, **opts)
        exact = {"name": "laplace_rect", "a": opts["a"], "b": opts["b"], "f0": opts["f0"]}
        return prob, exact
    if overrides:
        raise ParseError("grid and noise options apply to builtin problems only", line=i0)
    if dim is None or not terms or not interior:
        raise ParseError("a problem needs dim, at least one term and interior points",
                         line=len(lines))
    bcs = [BoundaryCondition(np.array(v)[:, :-1], np.array(v)[:, -1], o, d)
           for (o, d), v in sorted(bnd.items())]
    return PdeProblem(terms, np.array(interior), np.array(source), bcs, kernel), None


def load_problem(path, overrides=None, kernel=None):
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read(), overrides, kernel)
