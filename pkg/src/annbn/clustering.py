"""Neighborhood construction: k-means (k-means++ seeding) and index blocks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewObservations

# rows per block when forming the m x N distance matrix
_CHUNK = 4096


@dataclass(frozen=True)
class Assignment:
    """Cluster labels per observation, with optional centers.

    ``inertia_history`` holds the within-cluster sum of squares after every
    Lloyd iteration (k-means only).
    """

    labels: np.ndarray
    centers: np.ndarray | None
    sizes: np.ndarray
    inertia_history: list = field(default_factory=list)

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)

    def members(self, k):
        return np.flatnonzero(self.labels == k)

    def groups(self):
        """Row indices of every cluster, in cluster order."""
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(self.sizes)[:-1]
        return np.split(order, bounds)

    def with_centers(self, X):
        X = np.asarray(X, dtype=float)
        centers = np.stack([X[g].mean(axis=0) for g in self.groups()])
        return Assignment(self.labels, centers, self.sizes, list(self.inertia_history))


def default_neuron_count(m, n):
    """Largest number of clusters that can each hold ``n + 1`` observations."""
    if m < n + 1:
        raise TooFewObservations(f"{m} observations cannot fill one cluster of {n + 1}")
    return m // (n + 1)


def _nearest(X, C, x_sq=None):
    """Index of and squared distance to the nearest row of ``C`` for each row of ``X``."""
    if x_sq is None:
        x_sq = np.einsum("ij,ij->i", X, X)
    c_sq = np.einsum("ij,ij->i", C, C)
    labels = np.empty(X.shape[0], dtype=np.int64)
    dmin = np.empty(X.shape[0])
    for s in range(0, X.shape[0], _CHUNK):
        d = x_sq[s:s + _CHUNK, None] - 2.0 * (X[s:s + _CHUNK] @ C.T) + c_sq[None, :]
        np.maximum(d, 0.0, out=d)
        labels[s:s + _CHUNK] = np.argmin(d, axis=1)
        dmin[s:s + _CHUNK] = d[np.arange(d.shape[0]), labels[s:s + _CHUNK]]
    return labels, dmin


def kmeans_plusplus(X, N, rng):
    """Pick ``N`` initial centers by D^2 sampling; returns their row indices."""
    m = X.shape[0]
    chosen = [int(rng.integers(m))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, N):
        total = d2.sum()
        if total > 0:
            nxt = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            nxt = min(nxt, m - 1)
        else:
            # every remaining point coincides with a center
            free = np.setdiff1d(np.arange(m), chosen)
            nxt = int(free[rng.integers(free.size)])
        chosen.append(nxt)
        np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1), out=d2)
        d2[nxt] = 0.0
    return np.array(chosen)


def _repair_empty(X, labels, centers, N):
    sizes = np.bincount(labels, minlength=N)
    for k in np.flatnonzero(sizes == 0):
        donor = int(np.argmax(sizes))
        idx = np.flatnonzero(labels == donor)
        far = idx[np.argmax(np.sum((X[idx] - centers[donor]) ** 2, axis=1))]
        labels[far] = k
        sizes[donor] -= 1
        sizes[k] = 1
    return labels


def kmeans(X, N, seed=0, max_iter=100):
    """Lloyd's algorithm from a k-means++ seed.

    Stops when no label changes or after ``max_iter`` iterations. Empty
    clusters take the point farthest from the center of the largest cluster.
    The result depends only on ``X``, ``N`` and ``seed``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    m = X.shape[0]
    if not 1 <= N <= m:
        raise ValueError(f"need 1 <= N <= m, got N={N}, m={m}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    rng = np.random.default_rng(seed)
    centers = X[kmeans_plusplus(X, N, rng)].copy()
    x_sq = np.einsum("ij,ij->i", X, X)
    labels = None
    history = []
    for _ in range(max_iter):
        new, _ = _nearest(X, centers, x_sq)
        new = _repair_empty(X, new, centers, N)
        converged = labels is not None and np.array_equal(new, labels)
        labels = new
        counts = np.bincount(labels, minlength=N)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        centers = sums / counts[:, None]
        history.append(float(np.sum((X - centers[labels]) ** 2)))
        if converged:
            break
    sizes = np.bincount(labels, minlength=N)
    return Assignment(labels, centers, sizes, history)


def ascending_partition(m, cluster_size):
    """Consecutive index blocks of ``cluster_size``; the remainder joins the last block.

    This yields ``m // cluster_size`` clusters. Centers are left unset; call
    ``Assignment.with_centers`` when they are needed.
    """
    if not 1 <= cluster_size <= m:
        raise ValueError(f"need 1 <= cluster_size <= m, got {cluster_size}, m={m}")
    N = m // cluster_size
    labels = np.minimum(np.arange(m) // cluster_size, N - 1)
    sizes = np.bincount(labels, minlength=N)
    return Assignment(labels, None, sizes)


def balance(X, assignment, size):
    """Redistribute points so that clusters hold ``size`` points where possible.

    Pairs (point, center) are visited by increasing distance and a point is
    placed whenever its center still has room. Left-over points (when
    ``m`` is not a multiple of ``size``) go to their nearest center.
    """
    X = np.asarray(X, dtype=float)
    if assignment.centers is None:
        assignment = assignment.with_centers(X)
    C = assignment.centers
    N, m = len(C), X.shape[0]
    d = np.sum(X ** 2, axis=1)[:, None] - 2.0 * X @ C.T + np.sum(C ** 2, axis=1)[None, :]
    order = np.argsort(d, axis=None, kind="stable")
    labels = np.full(m, -1, dtype=np.int64)
    room = np.full(N, size)
    placed = 0
    for flat in order:
        i, k = divmod(int(flat), N)
        if labels[i] >= 0 or room[k] == 0:
            continue
        labels[i] = k
        room[k] -= 1
        placed += 1
        if placed == m or not room.any():
            break
    rest = np.flatnonzero(labels < 0)
    if rest.size:
        labels[rest] = np.argmin(d[rest], axis=1)
    sizes = np.bincount(labels, minlength=N)
    out = Assignment(labels, None, sizes)
    return out.with_centers(X) if np.all(sizes > 0) else out
