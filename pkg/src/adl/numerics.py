"""Dense-matrix primitives: validation, seeded RNG, singular values,
optimal assignment and K-Means.

Matrices are plain ``numpy.ndarray`` of dtype float64. Every public function
validates finiteness on entry and raises :class:`InvalidInputError` otherwise.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError


def as_matrix(M, name="matrix", ndim=2):
    """Return ``M`` as a finite float64 array of the given dimensionality."""
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def make_rng(seed):
    """Seeded generator: PCG64 via ``numpy.random.Generator``.

    PCG64 output is specified bit-for-bit by numpy and is identical across
    platforms for a given seed.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def singular_values(M):
    """Singular values of ``M`` in descending order (``min(rows, cols)`` of them)."""
    M = as_matrix(M, "M")
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def numerical_rank(M, rtol=1e-8):
    """Count of singular values above ``rtol * sigma_max``."""
    s = singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def linear_assignment(cost, maximize=False):
    """Optimal assignment on a square cost matrix.

    Returns
    -------
    perm : ndarray of int
        ``perm[i]`` is the column matched to row ``i``.
    value : float
        Total cost (or gain, when ``maximize``) of the matching.
    """
    cost = as_matrix(cost, "cost")
    if cost.shape[0] != cost.shape[1]:
        raise InvalidInputError(f"cost matrix must be square, got {cost.shape}")
    rows, cols = linear_sum_assignment(cost, maximize=maximize)
    perm = np.empty(cost.shape[0], dtype=np.int64)
    perm[rows] = cols
    value = float(cost[np.arange(cost.shape[0]), perm].sum())
    return perm, value


def _sq_distances(X, centroids, x_sq=None):
    if x_sq is None:
        x_sq = np.einsum("ij,ij->i", X, X)
    c_sq = np.einsum("ij,ij->i", centroids, centroids)
    d2 = x_sq[:, None] - 2.0 * (X @ centroids.T) + c_sq[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def kmeans_plusplus(X, m, rng):
    """k-means++ seeding; returns the chosen row indices of ``X``."""
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_distances(X, X[chosen[0]][None, :])[:, 0]
    for _ in range(1, m):
        total = closest.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))
        chosen.append(idx)
        np.minimum(closest, _sq_distances(X, X[idx][None, :])[:, 0], out=closest)
    return np.asarray(chosen)


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    objective: list = field(default_factory=list)
    n_iter: int = 0


def kmeans_fit(X, m, max_iters=100, rng=0):
    """Lloyd's algorithm with k-means++ seeding.

    Each returned centroid is exactly the mean of the rows assigned to it in
    ``labels``, so it is an explicit convex combination of data rows. A cluster
    that empties is re-seeded with the point farthest from its current centroid
    (lowest index on ties), taken only from clusters with more than one member.

    ``objective`` holds the within-cluster sum of squares after each update and
    is non-increasing.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    if m < 1 or m > n:
        raise InvalidInputError(f"need 1 <= m <= n, got m={m}, n={n}")
    if max_iters < 1:
        raise InvalidInputError("max_iters must be >= 1")
    rng = make_rng(rng)

    x_sq = np.einsum("ij,ij->i", X, X)
    centroids = X[kmeans_plusplus(X, m, rng)].copy()
    labels = None
    history = []
    it = 0
    for it in range(1, max_iters + 1):
        d2 = _sq_distances(X, centroids, x_sq)
        new_labels = np.argmin(d2, axis=1)
        counts = np.bincount(new_labels, minlength=m)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            own = d2[np.arange(n), new_labels]
            for j in empty:
                movable = counts[new_labels] > 1
                cand = np.where(movable, own, -np.inf)
                p = int(np.argmax(cand))
                counts[new_labels[p]] -= 1
                new_labels[p] = j
                counts[j] = 1
                own[p] = -np.inf
        converged = labels is not None and np.array_equal(new_labels, labels)
        labels = new_labels
        centroids = _cluster_means(X, labels, m)
        diff = X - centroids[labels]
        history.append(float(np.einsum("ij,ij->", diff, diff)))
        if converged:
            break
    return KMeansResult(centroids=centroids, labels=labels, objective=history, n_iter=it)


def _cluster_means(X, labels, m):
    sums = np.zeros((m, X.shape[1]))
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=m).astype(np.float64)
    return sums / counts[:, None]


def kmeans(X, m, max_iters=100, rng=0):
    """Centroids (``m x d``) from :func:`kmeans_fit`."""
    return kmeans_fit(X, m, max_iters=max_iters, rng=rng).centroids
