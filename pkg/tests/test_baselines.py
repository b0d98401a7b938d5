import numpy as np
import pytest

from adl.baselines import (
    fit_convexnmf,
    fit_kmeans_coding,
    fit_pca,
    fit_seminmf,
    nmf_loss,
    nonneg_codes,
)
from adl.errors import InvalidInputError
from adl.metrics import r2
from adl.numerics import make_rng


def planted_nonneg(rng, n=300, d=10, k=4):
    Z = rng.random((n, k)) * (rng.random((n, k)) < 0.6)
    D = rng.random((k, d))
    return Z @ D


def elementwise_loss(A, Z, D, l1):
    n, d = A.shape
    total = 0.0
    for i in range(n):
        for j in range(d):
            total += (A[i, j] - sum(Z[i, a] * D[a, j] for a in range(D.shape[0]))) ** 2
    return total / n + l1 * Z.sum() / n


class TestSemiNmf:
    def test_planted_recovery(self):
        A = planted_nonneg(make_rng(0))
        m = fit_seminmf(A, 4, l1=0.0, iters=1500, rng=1)
        assert r2(A, m.Z @ m.D) >= 0.95

    def test_constraints(self):
        A = make_rng(1).standard_normal((80, 6))
        m = fit_seminmf(A, 5, l1=0.01, iters=100, rng=0)
        assert np.all(m.Z >= 0)
        np.testing.assert_allclose(np.linalg.norm(m.D, axis=1), 1.0, atol=1e-12)
        assert m.Z.shape == (80, 5) and m.D.shape == (5, 6)

    def test_large_l1_kills_codes(self):
        A = make_rng(2).standard_normal((60, 5))
        m = fit_seminmf(A, 4, l1=1e4, iters=300, rng=0)
        assert np.all(m.Z == 0)
        assert m.history[-1] == pytest.approx(np.sum(A * A) / 60, rel=1e-12)

    def test_bad_k(self):
        with pytest.raises(InvalidInputError):
            fit_seminmf(np.ones((4, 2)), 0)


class TestConvexNmf:
    def test_conic_certificate(self):
        A = make_rng(3).standard_normal((50, 4))
        m = fit_convexnmf(A, 6, l1=0.01, iters=200, rng=0)
        assert np.all(m.W >= 0)
        assert np.all(m.Z >= 0)
        np.testing.assert_allclose(m.D, m.W @ A, atol=1e-12)

    def test_identity_factorization(self):
        A = make_rng(4).standard_normal((7, 3))
        assert nmf_loss(A, np.eye(7), np.eye(7) @ A) == 0.0

    def test_k_equals_n_fits(self):
        A = np.abs(make_rng(5).standard_normal((8, 4)))
        m = fit_convexnmf(A, 8, iters=2000, rng=0)
        assert m.history[-1] < 1e-3 * np.sum(A * A) / 8

    def test_loss_matches_oracle(self):
        A = make_rng(6).standard_normal((12, 3))
        m = fit_convexnmf(A, 4, l1=0.05, iters=50, rng=2)
        assert m.history[-1] == pytest.approx(elementwise_loss(A, m.Z, m.D, 0.05), rel=1e-12)


class TestPca:
    def test_plane(self):
        rng = make_rng(7)
        A = rng.standard_normal((100, 2)) @ rng.standard_normal((2, 5)) + rng.standard_normal(5)
        m = fit_pca(A, 2)
        assert r2(A, m.reconstruct()) == pytest.approx(1.0, abs=1e-9)

    def test_orthonormal(self):
        m = fit_pca(make_rng(8).standard_normal((40, 6)), 4)
        np.testing.assert_allclose(m.D @ m.D.T, np.eye(4), atol=1e-9)

    def test_residual_is_tail_spectrum(self):
        A = make_rng(9).standard_normal((60, 6))
        m = fit_pca(A, 3)
        s = np.linalg.svd(A - A.mean(axis=0), compute_uv=False)
        resid = A - m.reconstruct()
        assert np.sum(resid ** 2) == pytest.approx(np.sum(s[3:] ** 2), rel=1e-9)

    def test_transform_matches_fit(self):
        A = make_rng(10).standard_normal((30, 4))
        m = fit_pca(A, 2)
        np.testing.assert_allclose(m.transform(A), m.Z, atol=1e-12)

    def test_k_too_large(self):
        with pytest.raises(InvalidInputError):
            fit_pca(np.ones((5, 3)), 4)


class TestKMeansCoding:
    def test_one_hot(self):
        m = fit_kmeans_coding(make_rng(11).standard_normal((100, 3)), 7, rng=0)
        assert np.all(np.count_nonzero(m.Z, axis=1) == 1)
        assert set(np.unique(m.Z)) <= {0.0, 1.0}

    def test_error_is_objective(self):
        A = make_rng(12).standard_normal((150, 4))
        m = fit_kmeans_coding(A, 6, rng=1)
        labels = np.argmax(m.Z, axis=1)
        sse = sum(np.sum((A[i] - m.D[labels[i]]) ** 2) for i in range(150))
        assert np.sum((A - m.reconstruct()) ** 2) == pytest.approx(sse, rel=1e-12)
        assert m.history[-1] == pytest.approx(sse, rel=1e-9)

    def test_two_blobs(self):
        rng = make_rng(13)
        a = rng.normal(size=(40, 2)) * 0.1 + [-4.0, 0.0]
        b = rng.normal(size=(40, 2)) * 0.1 + [4.0, 2.0]
        A = np.vstack([a, b])
        rec = fit_kmeans_coding(A, 2, rng=0).reconstruct()
        np.testing.assert_allclose(rec[:40], np.tile(a.mean(axis=0), (40, 1)), atol=1e-12)
        np.testing.assert_allclose(rec[40:], np.tile(b.mean(axis=0), (40, 1)), atol=1e-12)

    def test_k_too_large(self):
        with pytest.raises(InvalidInputError):
            fit_kmeans_coding(np.ones((3, 2)), 4)


def test_nonneg_codes_recovers_planted():
    rng = make_rng(14)
    D = np.eye(5)[:4] + 0.1 * rng.standard_normal((4, 5))
    Z = rng.random((20, 4))
    np.testing.assert_allclose(nonneg_codes(Z @ D, D, iters=2000), Z, atol=1e-6)
