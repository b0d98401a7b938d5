"""Classical dictionary-learning baselines emitting the same (D, Z) shapes as SAEs.

Semi-NMF and Convex-NMF are fit by full-batch Adam with projections after each
step; PCA by SVD of the centered data; K-Means coding by Lloyd's algorithm.
"""

from dataclasses import dataclass, field

import numpy as np

from .dictionaries import normalize_rows
from .errors import InvalidInputError, TrainingDivergedError
from .numerics import as_matrix, kmeans_fit, make_rng
from .training import Adam

KINDS = ("seminmf", "convexnmf", "kmeans", "pca")


@dataclass
class BaselineModel:
    kind: str
    D: np.ndarray
    Z: np.ndarray
    W: np.ndarray = None
    offset: np.ndarray = None
    l1: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def n_atoms(self):
        return self.D.shape[0]

    def atoms(self):
        return self.D

    def transform(self, A, iters=300):
        """Codes for new rows under this model's constraint family."""
        A = as_matrix(A, "A")
        if self.kind == "pca":
            return (A - self.offset) @ self.D.T
        if self.kind == "kmeans":
            return _one_hot(_nearest(A, self.D), self.n_atoms)
        return nonneg_codes(A, self.D, l1=self.l1, iters=iters)

    def reconstruct(self, Z=None):
        Z = self.Z if Z is None else Z
        out = Z @ self.D
        return out if self.offset is None else out + self.offset


def _one_hot(labels, k):
    Z = np.zeros((labels.shape[0], k))
    Z[np.arange(labels.shape[0]), labels] = 1.0
    return Z


def _nearest(A, centroids):
    d2 = (np.einsum("ij,ij->i", A, A)[:, None] - 2.0 * A @ centroids.T
          + np.einsum("ij,ij->i", centroids, centroids)[None, :])
    return np.argmin(d2, axis=1)


def nonneg_codes(A, D, l1=0.0, iters=300):
    """Solve ``min_{Z >= 0} ||A - Z D||^2 / n + l1 * sum(Z) / n`` by FISTA."""
    n = A.shape[0]
    G = D @ D.T
    L = 2.0 * np.linalg.eigvalsh(G)[-1]
    if L <= 0:
        return np.zeros((n, D.shape[0]))
    AD = A @ D.T
    Z = np.maximum(AD / max(np.diag(G).max(), 1e-12), 0.0)
    Y, t = Z.copy(), 1.0
    for _ in range(iters):
        grad = 2.0 * (Y @ G - AD) + l1
        Z_new = np.maximum(Y - grad / L, 0.0)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Y = Z_new + ((t - 1.0) / t_new) * (Z_new - Z)
        Z, t = Z_new, t_new
    return Z


def _check(loss, step):
    if not np.isfinite(loss):
        raise TrainingDivergedError(step, loss)


def nmf_loss(A, Z, D, l1=0.0):
    R = Z @ D - A
    n = A.shape[0]
    return float(np.einsum("ij,ij->", R, R)) / n + l1 * float(Z.sum()) / n


def fit_seminmf(A, k, l1=0.0, iters=1000, rng=0, lr=1e-2):
    """Semi-NMF: ``Z >= 0``, ``D`` free with unit-norm rows."""
    A = as_matrix(A, "A")
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    rng = make_rng(rng)
    n, _ = A.shape
    D = normalize_rows(A[rng.choice(n, size=k, replace=n < k)]
                       + 1e-3 * rng.standard_normal((k, A.shape[1])))
    Z = nonneg_codes(A, D, l1=l1, iters=50)
    params = {"Z": Z, "D": D}
    opt = Adam(lr=lr)
    history = []
    for step in range(iters):
        Z, D = params["Z"], params["D"]
        R = Z @ D - A
        loss = float(np.einsum("ij,ij->", R, R)) / n + l1 * float(Z.sum()) / n
        _check(loss, step)
        history.append(loss)
        grads = {"Z": (2.0 / n) * (R @ D.T) + l1 / n, "D": (2.0 / n) * (Z.T @ R)}
        opt.step(params, grads)
        np.maximum(params["Z"], 0.0, out=params["Z"])
        params["D"][:] = normalize_rows(params["D"])
    Z, D = params["Z"], params["D"]
    history.append(nmf_loss(A, Z, D, l1))
    return BaselineModel("seminmf", D=D, Z=Z, l1=l1, history=history)


def fit_convexnmf(A, k, l1=0.0, iters=1000, rng=0, lr=1e-2):
    """Convex-NMF: ``D = W A`` with ``W >= 0`` (rows not normalized), ``Z >= 0``."""
    A = as_matrix(A, "A")
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    rng = make_rng(rng)
    n = A.shape[0]
    W = np.zeros((k, n))
    W[np.arange(k), rng.choice(n, size=k, replace=n < k)] = 1.0
    Z = nonneg_codes(A, W @ A, l1=l1, iters=50)
    params = {"Z": Z, "W": W}
    opt = Adam(lr=lr)
    history = []
    for step in range(iters):
        Z, W = params["Z"], params["W"]
        D = W @ A
        R = Z @ D - A
        loss = float(np.einsum("ij,ij->", R, R)) / n + l1 * float(Z.sum()) / n
        _check(loss, step)
        history.append(loss)
        dD = (2.0 / n) * (Z.T @ R)
        grads = {"Z": (2.0 / n) * (R @ D.T) + l1 / n, "W": dD @ A.T}
        opt.step(params, grads)
        np.maximum(params["Z"], 0.0, out=params["Z"])
        np.maximum(params["W"], 0.0, out=params["W"])
    Z, W = params["Z"], params["W"]
    D = W @ A
    history.append(nmf_loss(A, Z, D, l1))
    return BaselineModel("convexnmf", D=D, Z=Z, W=W, l1=l1, history=history)


def fit_pca(A, k):
    """Top-``k`` right singular vectors of the centered data; codes are projections."""
    A = as_matrix(A, "A")
    if not 1 <= k <= min(A.shape):
        raise InvalidInputError(f"k={k} must be in [1, {min(A.shape)}]")
    mean = A.mean(axis=0)
    _, _, Vt = np.linalg.svd(A - mean, full_matrices=False)
    D = Vt[:k].copy()
    Z = (A - mean) @ D.T
    return BaselineModel("pca", D=D, Z=Z, offset=mean)


def fit_kmeans_coding(A, k, rng=0, iters=100):
    """Centroids as atoms, one-hot assignment codes."""
    A = as_matrix(A, "A")
    if k > A.shape[0]:
        raise InvalidInputError(f"k={k} exceeds n={A.shape[0]}")
    res = kmeans_fit(A, k, max_iters=iters, rng=rng)
    return BaselineModel("kmeans", D=res.centroids, Z=_one_hot(res.labels, k),
                         history=list(res.objective))
