import numpy as np
import pytest

from adl.distillation import DistillConfig, distill
from adl.errors import InvalidInputError
from adl.numerics import make_rng


def test_n_prime_equals_n_gives_the_points():
    A = make_rng(0).standard_normal((25, 3))
    C = distill(A, DistillConfig(n_prime=25, kmeans_iters=20, seed=1))
    order_a = np.lexsort(A.T)
    order_c = np.lexsort(C.T)
    np.testing.assert_allclose(C[order_c], A[order_a], atol=1e-12)


def test_centroids_are_cluster_means():
    A = make_rng(1).standard_normal((400, 5))
    C, labels = distill(A, DistillConfig(n_prime=30, kmeans_iters=25, seed=2), return_labels=True)
    for j in range(30):
        members = A[labels == j]
        # uniform weights over the members: explicit convex certificate
        weights = np.full(len(members), 1.0 / len(members))
        np.testing.assert_allclose(C[j], weights @ members, atol=1e-12)


def test_two_blobs():
    rng = make_rng(2)
    a = rng.normal(size=(60, 3)) * 0.2 + [3.0, 0.0, 0.0]
    b = rng.normal(size=(60, 3)) * 0.2 - [3.0, 0.0, 0.0]
    C = distill(np.vstack([a, b]), DistillConfig(n_prime=2, seed=0))
    C = C[np.argsort(C[:, 0])]
    np.testing.assert_allclose(C, [b.mean(axis=0), a.mean(axis=0)], atol=1e-12)


def test_deterministic():
    A = make_rng(3).standard_normal((300, 4))
    cfg = DistillConfig(n_prime=20, seed=5)
    assert distill(A, cfg).tobytes() == distill(A, cfg).tobytes()


def test_n_prime_too_large():
    with pytest.raises(InvalidInputError):
        distill(np.zeros((5, 2)), DistillConfig(n_prime=6))


def test_invalid_config():
    with pytest.raises(InvalidInputError):
        DistillConfig(n_prime=0)
