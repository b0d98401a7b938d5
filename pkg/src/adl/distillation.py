"""Reduce a large activation matrix to a small set of candidate archetypes."""

from dataclasses import dataclass

from .errors import InvalidInputError
from .numerics import as_matrix, kmeans_fit


@dataclass
class DistillConfig:
    n_prime: int = 512
    kmeans_iters: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.n_prime < 1:
            raise InvalidInputError("n_prime must be >= 1")
        if self.kmeans_iters < 1:
            raise InvalidInputError("kmeans_iters must be >= 1")


def distill(A, cfg=None, return_labels=False):
    """K-Means centroids of ``A`` (``n_prime x d``).

    Each centroid is the mean of its cluster, so ``conv(C)`` lies inside
    ``conv(A)``; with ``return_labels`` the cluster labels are returned as the
    explicit certificate.
    """
    cfg = cfg or DistillConfig()
    A = as_matrix(A, "A")
    if cfg.n_prime > A.shape[0]:
        raise InvalidInputError(f"n_prime={cfg.n_prime} exceeds n={A.shape[0]}")
    res = kmeans_fit(A, cfg.n_prime, max_iters=cfg.kmeans_iters, rng=cfg.seed)
    if return_labels:
        return res.centroids, res.labels
    return res.centroids
