"""Affine encoder ``sigma(A @ W_enc + b)`` with ReLU, TopK or JumpReLU."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .numerics import as_matrix

NONLINEARITIES = ("relu", "topk", "jumprelu")

_SQRT2 = np.sqrt(2.0)


@dataclass
class EncoderParams:
    """Encoder weights and nonlinearity configuration.

    ``log_theta`` stores JumpReLU thresholds in log space so that
    ``theta = exp(log_theta) > 0`` always.
    """

    W_enc: np.ndarray
    b: np.ndarray
    nonlinearity: str = "relu"
    k_active: int = None
    log_theta: np.ndarray = None
    bandwidth: float = 1e-2

    def __post_init__(self):
        if self.nonlinearity not in NONLINEARITIES:
            raise InvalidInputError(f"unknown nonlinearity {self.nonlinearity!r}")
        k = self.W_enc.shape[1]
        if self.b.shape != (k,):
            raise InvalidInputError(f"bias shape {self.b.shape} != ({k},)")
        if self.nonlinearity == "topk":
            if self.k_active is None or not 1 <= self.k_active <= k:
                raise InvalidInputError(f"TopK needs 1 <= K <= {k}, got {self.k_active}")
        if self.nonlinearity == "jumprelu":
            if not self.bandwidth > 0:
                raise InvalidInputError("JumpReLU bandwidth must be > 0")
            if self.log_theta is None:
                self.log_theta = np.full(k, np.log(0.1))
            if self.log_theta.shape != (k,):
                raise InvalidInputError(f"theta shape {self.log_theta.shape} != ({k},)")

    @classmethod
    def initialize(cls, d, k, rng, nonlinearity="relu", k_active=None,
                   theta_init=0.1, bandwidth=1e-2):
        """Fan-in uniform weights in ``[-1/sqrt(d), 1/sqrt(d)]``, zero bias."""
        bound = 1.0 / np.sqrt(d)
        W_enc = rng.uniform(-bound, bound, size=(d, k))
        log_theta = np.full(k, np.log(theta_init)) if nonlinearity == "jumprelu" else None
        return cls(W_enc=W_enc, b=np.zeros(k), nonlinearity=nonlinearity,
                   k_active=k_active, log_theta=log_theta, bandwidth=bandwidth)

    @property
    def n_atoms(self):
        return self.W_enc.shape[1]

    @property
    def theta(self):
        return None if self.log_theta is None else np.exp(self.log_theta)


def topk_mask(P, K):
    """Boolean mask of the ``K`` largest positive entries per row.

    Ties keep the lowest column index (stable sort on the negated values).
    """
    P = np.asarray(P, dtype=np.float64)
    k = P.shape[-1]
    if K > k:
        raise InvalidInputError(f"K={K} exceeds length {k}")
    order = np.argsort(-P, axis=-1, kind="stable")[..., :K]
    mask = np.zeros(P.shape, dtype=bool)
    np.put_along_axis(mask, order, True, axis=-1)
    mask &= P > 0.0
    return mask


def topk_select(v, K):
    """ReLU, then keep only the ``K`` largest entries of ``v``."""
    v = as_matrix(v, "v", ndim=1)
    if K > v.shape[0]:
        raise InvalidInputError(f"K={K} exceeds length {v.shape[0]}")
    return np.where(topk_mask(v, K), v, 0.0)


def silverman_kernel(u):
    """``0.5 * exp(-|u|/sqrt 2) * sin(|u|/sqrt 2 + pi/4)``; integrates to one."""
    a = np.abs(u) / _SQRT2
    return 0.5 * np.exp(-a) * np.sin(a + np.pi / 4)


def jumprelu_pseudograd(pre, theta, bandwidth):
    """Straight-through derivatives of ``pre * H(pre - theta)``.

    Returns ``(d_out/d_pre, d_out/d_theta)`` where the threshold derivative is
    the kernel estimate ``-(theta/bandwidth) * K((pre - theta)/bandwidth)``.
    """
    if not bandwidth > 0:
        raise InvalidInputError("bandwidth must be > 0")
    pre = np.asarray(pre, dtype=np.float64)
    gate = (pre > theta).astype(np.float64)
    d_theta = -(theta / bandwidth) * silverman_kernel((pre - theta) / bandwidth)
    if gate.ndim == 0:
        return float(gate), float(d_theta)
    return gate, d_theta


def preactivation(A, params):
    A = as_matrix(A, "A")
    if A.shape[1] != params.W_enc.shape[0]:
        raise InvalidInputError(
            f"A has {A.shape[1]} features, encoder expects {params.W_enc.shape[0]}"
        )
    return A @ params.W_enc + params.b


def activation_mask(P, params):
    """Where the nonlinearity passes the pre-activation through unchanged."""
    if params.nonlinearity == "relu":
        return P > 0.0
    if params.nonlinearity == "topk":
        return topk_mask(P, params.k_active)
    return P > params.theta


def encode(A, params):
    """Nonnegative codes ``Z`` (``n x k``) for the rows of ``A``."""
    P = preactivation(A, params)
    return np.where(activation_mask(P, params), P, 0.0)
