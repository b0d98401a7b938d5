"""Free and archetypal dictionaries.

A free dictionary stores its ``k x d`` atom matrix directly, rows kept at unit
norm. An archetypal dictionary stores a row-stochastic mixing matrix ``W`` over
fixed candidate points ``C`` plus a bounded relaxation ``Lambda``; its atoms are
``W @ C + Lambda``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .numerics import as_matrix


def project_row_stochastic(W):
    """ReLU then normalize each row to sum to one.

    Rows with no positive entry become uniform. Rows that are already
    nonnegative and sum to one within 1e-12 are returned bit-for-bit, which
    makes the projection exactly idempotent.
    """
    W = np.maximum(as_matrix(W, "W"), 0.0)
    sums = W.sum(axis=1, keepdims=True)
    dead = sums[:, 0] <= 0.0
    if np.any(dead):
        W[dead] = 1.0
        sums[dead] = W.shape[1]
    sums[np.abs(sums - 1.0) <= 1e-12] = 1.0
    return W / sums


def clamp_relaxation(Lam, delta):
    """Scale every row of ``Lam`` whose l2 norm exceeds ``delta`` down to ``delta``."""
    if not delta >= 0:
        raise InvalidInputError(f"delta must be >= 0, got {delta}")
    Lam = as_matrix(Lam, "Lambda")
    if delta == 0:
        return np.zeros_like(Lam)
    norms = np.linalg.norm(Lam, axis=1, keepdims=True)
    scale = np.ones_like(norms)
    over = norms > delta
    scale[over] = delta / norms[over]
    return Lam * scale


def normalize_rows(D, eps=0.0):
    """Unit-l2 rows; rows with norm <= ``eps`` are returned unchanged."""
    D = np.asarray(D, dtype=np.float64)
    norms = np.linalg.norm(D, axis=1, keepdims=True)
    safe = np.where(norms > eps, norms, 1.0)
    return D / safe


@dataclass
class FreeDictionary:
    D: np.ndarray

    kind = "free"

    @property
    def n_atoms(self):
        return self.D.shape[0]

    def atoms(self):
        return self.D

    def renormalize(self):
        self.D = normalize_rows(self.D)


@dataclass
class ArchetypalDictionary:
    """Atoms ``W @ C + Lambda`` with ``W`` row-stochastic and ``||Lambda_i|| <= delta``."""

    W: np.ndarray
    C: np.ndarray
    Lambda: np.ndarray
    delta: float = 0.0

    kind = "archetypal"

    def __post_init__(self):
        self.C = as_matrix(self.C, "C").copy()
        self.C.setflags(write=False)
        if self.W.shape[1] != self.C.shape[0]:
            raise InvalidInputError(
                f"W has {self.W.shape[1]} columns but C has {self.C.shape[0]} rows"
            )
        if self.Lambda.shape != (self.W.shape[0], self.C.shape[1]):
            raise InvalidInputError(
                f"Lambda shape {self.Lambda.shape} != {(self.W.shape[0], self.C.shape[1])}"
            )
        if not self.delta >= 0:
            raise InvalidInputError(f"delta must be >= 0, got {self.delta}")

    @classmethod
    def initialize(cls, C, k, delta=0.0):
        """Identity-like mixing (``eye(k, n')``, projected) and zero relaxation."""
        C = as_matrix(C, "C")
        n_prime, d = C.shape
        W = project_row_stochastic(np.eye(k, n_prime))
        return cls(W=W, C=C, Lambda=np.zeros((k, d)), delta=float(delta))

    @property
    def n_atoms(self):
        return self.W.shape[0]

    def project(self):
        self.W = project_row_stochastic(self.W)
        self.Lambda = clamp_relaxation(self.Lambda, self.delta)

    def atoms(self):
        return materialize(self)


def materialize(dictionary):
    """Atom matrix ``W @ C + Lambda`` of an archetypal dictionary."""
    W, C, Lam = dictionary.W, dictionary.C, dictionary.Lambda
    if W.shape[1] != C.shape[0] or Lam.shape != (W.shape[0], C.shape[1]):
        raise InvalidInputError(
            f"shape mismatch: W {W.shape}, C {C.shape}, Lambda {Lam.shape}"
        )
    return W @ C + Lam


def decode(Z, dictionary):
    """Reconstruction ``Z @ D`` for either dictionary kind (or a raw atom matrix)."""
    D = dictionary.atoms() if hasattr(dictionary, "atoms") else as_matrix(dictionary, "D")
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != D.shape[0]:
        raise InvalidInputError(f"codes shape {Z.shape} incompatible with {D.shape[0]} atoms")
    return Z @ D
