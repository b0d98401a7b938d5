import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adl.errors import InvalidInputError
from adl.numerics import (
    kmeans,
    kmeans_fit,
    linear_assignment,
    make_rng,
    numerical_rank,
    singular_values,
)


def brute_force_assignment(cost, maximize):
    k = cost.shape[0]
    best = None
    for perm in itertools.permutations(range(k)):
        v = sum(cost[i, perm[i]] for i in range(k))
        if best is None or (v > best if maximize else v < best):
            best = v
    return best


class TestSingularValues:
    def test_identity(self):
        np.testing.assert_array_equal(singular_values(np.eye(3)), [1.0, 1.0, 1.0])

    def test_diagonal(self):
        np.testing.assert_allclose(singular_values(np.diag([3.0, 2.0])), [3.0, 2.0])

    def test_frobenius_identity(self):
        rng = make_rng(5)
        for _ in range(50):
            M = rng.standard_normal((5, 3))
            s = singular_values(M)
            assert s.shape == (3,)
            assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
            fro2 = np.sum(M * M)
            assert abs(np.sum(s ** 2) - fro2) <= 1e-9 * fro2

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            singular_values(np.array([[1.0, np.nan]]))

    def test_numerical_rank(self):
        rng = make_rng(0)
        M = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
        assert numerical_rank(M) == 2


class TestLinearAssignment:
    def test_identity_maximize(self):
        perm, value = linear_assignment(np.eye(4), maximize=True)
        np.testing.assert_array_equal(perm, np.arange(4))
        assert value == 4.0

    def test_swap_minimize(self):
        perm, value = linear_assignment(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_array_equal(perm, [0, 1])
        assert value == 0.0
        perm, value = linear_assignment(np.array([[1.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_array_equal(perm, [1, 0])
        assert value == 0.0

    def test_random_6x6_matches_exhaustive(self):
        rng = make_rng(11)
        for _ in range(10):
            cost = rng.standard_normal((6, 6))
            for maximize in (False, True):
                perm, value = linear_assignment(cost, maximize=maximize)
                assert sorted(perm) == list(range(6))
                assert value == pytest.approx(brute_force_assignment(cost, maximize), abs=1e-12)

    def test_brute_force_k_up_to_7(self):
        rng = make_rng(2024)
        for trial in range(200):
            k = 1 + trial % 7
            cost = rng.uniform(-1, 1, size=(k, k))
            maximize = bool(trial % 2)
            _, value = linear_assignment(cost, maximize=maximize)
            assert value == pytest.approx(brute_force_assignment(cost, maximize), abs=1e-12)

    def test_non_square(self):
        with pytest.raises(InvalidInputError):
            linear_assignment(np.zeros((2, 3)))


def two_blobs(rng, n_per=50):
    a = rng.normal(size=(n_per, 2)) * 0.1 + np.array([-5.0, 0.0])
    b = rng.normal(size=(n_per, 2)) * 0.1 + np.array([5.0, 1.0])
    return np.vstack([a, b]), a, b


class TestKMeans:
    def test_two_blobs_exact_means(self):
        X, a, b = two_blobs(make_rng(0))
        C = kmeans(X, 2, max_iters=50, rng=1)
        C = C[np.argsort(C[:, 0])]
        np.testing.assert_allclose(C[0], a.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(C[1], b.mean(axis=0), atol=1e-12)

    def test_identical_points(self):
        X = np.tile([[1.5, -2.0, 3.0]], (7, 1))
        np.testing.assert_allclose(kmeans(X, 1, rng=0), [[1.5, -2.0, 3.0]])

    def test_centroids_are_cluster_means(self):
        rng = make_rng(3)
        X = rng.standard_normal((300, 4))
        res = kmeans_fit(X, 17, max_iters=30, rng=4)
        for j in range(17):
            members = X[res.labels == j]
            assert len(members) > 0
            np.testing.assert_allclose(res.centroids[j], members.mean(axis=0), atol=1e-12)

    def test_objective_non_increasing(self):
        rng = make_rng(8)
        X = rng.standard_normal((500, 3))
        res = kmeans_fit(X, 25, max_iters=100, rng=9)
        obj = np.array(res.objective)
        assert np.all(np.diff(obj) <= 1e-9 * obj[0])

    def test_empty_cluster_reseeding(self):
        # duplicated points force k-means++ to pick repeats, leaving empty clusters
        X = np.vstack([np.zeros((5, 2)), np.ones((5, 2)), [[10.0, 10.0]]])
        res = kmeans_fit(X, 4, max_iters=20, rng=0)
        counts = np.bincount(res.labels, minlength=4)
        assert np.all(counts > 0)

    def test_reproducible(self):
        X = make_rng(1).standard_normal((200, 5))
        a = kmeans(X, 9, rng=42)
        b = kmeans(X, 9, rng=42)
        assert a.tobytes() == b.tobytes()

    def test_m_greater_than_n(self):
        with pytest.raises(InvalidInputError):
            kmeans(np.zeros((3, 2)), 4)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rows=st.integers(1, 8), cols=st.integers(1, 8))
def test_frobenius_property(seed, rows, cols):
    M = make_rng(seed).standard_normal((rows, cols))
    s = singular_values(M)
    assert len(s) == min(rows, cols)
    assert abs(np.sum(s ** 2) - np.sum(M * M)) <= 1e-9 * max(np.sum(M * M), 1e-300)
