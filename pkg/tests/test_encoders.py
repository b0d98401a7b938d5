import numpy as np
import pytest
from scipy.integrate import quad

from adl.encoders import (
    EncoderParams,
    encode,
    jumprelu_pseudograd,
    silverman_kernel,
    topk_select,
)
from adl.errors import InvalidInputError
from adl.numerics import make_rng


def identity_encoder(nonlin="relu", **kw):
    return EncoderParams(W_enc=np.eye(kw.pop("k", 2)), b=np.zeros(kw.pop("bk", 2)),
                         nonlinearity=nonlin, **kw)


class TestEncode:
    def test_relu(self):
        np.testing.assert_array_equal(encode([[1.0, -2.0]], identity_encoder()), [[1.0, 0.0]])

    def test_topk_from_preactivation(self):
        p = identity_encoder("topk", k=4, bk=4, k_active=2)
        np.testing.assert_array_equal(encode([[3.0, 1.0, 2.0, -5.0]], p), [[3.0, 0.0, 2.0, 0.0]])

    def test_jumprelu_threshold(self):
        p = identity_encoder("jumprelu", log_theta=np.zeros(2))
        np.testing.assert_array_equal(encode([[0.5, 1.5]], p), [[0.0, 1.5]])

    def test_bias_broadcast(self):
        p = EncoderParams(W_enc=np.eye(2), b=np.array([1.0, -1.0]))
        np.testing.assert_array_equal(encode([[0.0, 0.0], [1.0, 3.0]], p), [[1.0, 0.0], [2.0, 2.0]])

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            encode(np.zeros((2, 3)), identity_encoder())

    def test_invalid_topk(self):
        with pytest.raises(InvalidInputError):
            identity_encoder("topk", k_active=3)

    def test_invalid_bandwidth(self):
        with pytest.raises(InvalidInputError):
            identity_encoder("jumprelu", bandwidth=0.0)

    @pytest.mark.parametrize("nonlin", ["relu", "topk", "jumprelu"])
    def test_nonnegative_and_sparse(self, nonlin):
        rng = make_rng(0)
        p = EncoderParams.initialize(6, 20, rng, nonlinearity=nonlin, k_active=3)
        Z = encode(rng.standard_normal((100, 6)) * 3, p)
        assert np.all(Z >= 0)
        if nonlin == "topk":
            assert np.all(np.count_nonzero(Z, axis=1) <= 3)

    def test_jumprelu_all_or_nothing(self):
        rng = make_rng(1)
        p = EncoderParams.initialize(5, 12, rng, nonlinearity="jumprelu", theta_init=0.2)
        A = rng.standard_normal((200, 5))
        P = A @ p.W_enc + p.b
        Z = encode(A, p)
        assert np.all((Z == 0) | (Z == P))

    @pytest.mark.parametrize("nonlin", ["relu", "topk", "jumprelu"])
    def test_permutation_equivariance(self, nonlin):
        rng = make_rng(2)
        p = EncoderParams.initialize(4, 9, rng, nonlinearity=nonlin, k_active=3)
        p.b = rng.standard_normal(9) * 0.1
        if nonlin == "jumprelu":
            p.log_theta = np.log(rng.uniform(0.05, 0.5, size=9))
        perm = rng.permutation(9)
        q = EncoderParams(W_enc=p.W_enc[:, perm], b=p.b[perm], nonlinearity=nonlin,
                          k_active=p.k_active,
                          log_theta=None if p.log_theta is None else p.log_theta[perm])
        A = rng.standard_normal((50, 4))
        np.testing.assert_array_equal(encode(A, q), encode(A, p)[:, perm])


class TestTopkSelect:
    def test_tie_break_lowest_index(self):
        np.testing.assert_array_equal(topk_select(np.array([2.0, 2.0, 2.0]), 1), [2.0, 0.0, 0.0])

    def test_all_negative(self):
        np.testing.assert_array_equal(topk_select(np.array([-1.0, -3.0, -2.0]), 2), [0.0, 0.0, 0.0])

    def test_largest(self):
        np.testing.assert_array_equal(topk_select(np.array([5.0, 1.0, 4.0, 3.0]), 2),
                                      [5.0, 0.0, 4.0, 0.0])

    def test_k_too_large(self):
        with pytest.raises(InvalidInputError):
            topk_select(np.array([1.0, 2.0]), 3)


class TestSilverman:
    def test_at_zero(self):
        assert silverman_kernel(0.0) == pytest.approx(np.sqrt(2) / 4, abs=1e-15)
        assert silverman_kernel(0.0) == pytest.approx(0.353553, abs=1e-6)

    def test_even(self):
        u = make_rng(3).standard_normal(100) * 5
        np.testing.assert_array_equal(silverman_kernel(u), silverman_kernel(-u))

    def test_unit_mass_by_quadrature(self):
        mass, _ = quad(silverman_kernel, -50, 50, points=[0.0], limit=200)
        assert mass == pytest.approx(1.0, abs=1e-3)


class TestJumpPseudograd:
    def test_far_above(self):
        d_pre, d_theta = jumprelu_pseudograd(5.0, 0.1, 0.01)
        assert d_pre == 1.0
        assert abs(d_theta) < 1e-12

    def test_far_below(self):
        d_pre, d_theta = jumprelu_pseudograd(-5.0, 0.1, 0.01)
        assert d_pre == 0.0
        assert abs(d_theta) < 1e-12

    def test_expected_theta_gradient_matches_smoothed_fd(self):
        """Mean pseudo-gradient vs finite difference of the Monte-Carlo expected loss."""
        rng = make_rng(7)
        x = rng.normal(1.0, 1.0, size=4_000_000)
        target, theta, bw, h = 0.3, 0.8, 1e-2, 0.02

        def expected_loss(th):
            y = np.where(x > th, x, 0.0)
            return np.mean((y - target) ** 2)

        fd = (expected_loss(theta + h) - expected_loss(theta - h)) / (2 * h)
        y = np.where(x > theta, x, 0.0)
        _, d_theta = jumprelu_pseudograd(x, theta, bw)
        est = np.mean(2 * (y - target) * d_theta)
        assert est == pytest.approx(fd, rel=0.10)
