"""Dictionary-learning report card: reconstruction, consistency, dictionary
structure, and code structure, plus the multi-seed stability protocol.

Every metric is a pure function of its arrays; inputs are never mutated.
Cosine-based metrics normalize atom rows internally.
"""

import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dictionaries import normalize_rows
from .errors import InvalidInputError, UndefinedMetricError
from .numerics import as_matrix, linear_assignment, singular_values


def r2(A, A_hat):
    """``1 - ||A - A_hat||_F^2 / ||A - mean(A)||_F^2`` with per-feature means."""
    A = as_matrix(A, "A")
    A_hat = as_matrix(A_hat, "A_hat")
    if A.shape != A_hat.shape:
        raise InvalidInputError(f"shape mismatch {A.shape} vs {A_hat.shape}")
    resid = A - A_hat
    centered = A - A.mean(axis=0)
    denom = float(np.einsum("ij,ij->", centered, centered))
    if denom == 0.0:
        raise UndefinedMetricError("R2 undefined for constant data")
    return 1.0 - float(np.einsum("ij,ij->", resid, resid)) / denom


def dead_codes(Z, tol=0.0):
    """Fraction of concepts whose total activation over the rows is ``<= tol``."""
    Z = as_matrix(Z, "Z")
    return float(np.mean(Z.sum(axis=0) <= tol))


def _cosines(D, D2):
    return normalize_rows(as_matrix(D, "D")) @ normalize_rows(as_matrix(D2, "D'")).T


def stability(D, D2):
    """Mean matched cosine under the best signed permutation of atoms.

    The optimal sign for each matched pair is the sign of its inner product,
    so the search reduces to an assignment on absolute cosines.
    """
    D = as_matrix(D, "D")
    D2 = as_matrix(D2, "D'")
    if D.shape[0] != D2.shape[0]:
        raise InvalidInputError(f"atom counts differ: {D.shape[0]} vs {D2.shape[0]}")
    if D.shape[1] != D2.shape[1]:
        raise InvalidInputError(f"atom widths differ: {D.shape[1]} vs {D2.shape[1]}")
    gain = np.abs(_cosines(D, D2))
    _, total = linear_assignment(gain, maximize=True)
    return total / D.shape[0]


def stability_matching(D, D2):
    """Matched column and sign per atom of ``D`` (see :func:`stability`)."""
    cos = _cosines(D, D2)
    perm, _ = linear_assignment(np.abs(cos), maximize=True)
    signs = np.sign(cos[np.arange(len(perm)), perm])
    signs[signs == 0] = 1.0
    return perm, signs


def max_cosine(D, D2):
    """Largest cosine between any atom of ``D`` and any atom of ``D2``."""
    return float(np.max(_cosines(D, D2)))


def ood_per_atom(D, A_ref):
    """``1 - max_j cos(D_i, A_j)`` for each atom; zero-norm data rows skipped."""
    D = as_matrix(D, "D")
    A_ref = as_matrix(A_ref, "A_ref")
    if A_ref.shape[0] == 0:
        raise InvalidInputError("reference data is empty")
    keep = np.linalg.norm(A_ref, axis=1) > 0
    if not np.any(keep):
        raise InvalidInputError("reference data has no nonzero rows")
    sims = normalize_rows(D) @ normalize_rows(A_ref[keep]).T
    return 1.0 - sims.max(axis=1)


def ood_score(D, A_ref):
    """Mean of :func:`ood_per_atom`; 0 when every atom points at a data row."""
    return float(np.mean(ood_per_atom(D, A_ref)))


def _nonzero_spectrum(D):
    D = as_matrix(D, "D")
    s = singular_values(D)
    if s.size == 0 or s[0] == 0.0:
        raise UndefinedMetricError("rank metrics undefined for a zero matrix")
    return D, s


def stable_rank(D):
    """``||D||_F^2 / ||D||_2^2``."""
    D, s = _nonzero_spectrum(D)
    return float(np.einsum("ij,ij->", D, D) / s[0] ** 2)


def effective_rank(D):
    """Exponentiated entropy of the singular values normalized to sum one."""
    _, s = _nonzero_spectrum(D)
    p = s / s.sum()
    p = p[p > 0]
    return float(np.exp(-np.sum(p * np.log(p))))


def coherence(D):
    """Largest absolute cosine between two distinct atoms."""
    D = as_matrix(D, "D")
    if D.shape[0] < 2:
        raise UndefinedMetricError("coherence needs at least two atoms")
    G = np.abs(_cosines(D, D))
    np.fill_diagonal(G, -np.inf)
    return float(G.max())


def connectivity(Z):
    """``1 - nnz(Z^T Z) / k^2``: share of concept pairs that never co-fire."""
    Z = as_matrix(Z, "Z")
    k = Z.shape[1]
    active = (Z != 0).astype(np.float64)
    return 1.0 - np.count_nonzero(active.T @ active) / k ** 2


def negative_interference(Z, D):
    """Frobenius norm of ``ReLU(-(Z^T Z) * (D D^T))``."""
    Z = as_matrix(Z, "Z")
    D = as_matrix(D, "D")
    if Z.shape[1] != D.shape[0]:
        raise InvalidInputError(f"codes have {Z.shape[1]} columns, D has {D.shape[0]} atoms")
    M = np.maximum(-(Z.T @ Z) * (D @ D.T), 0.0)
    return float(np.sqrt(np.einsum("ij,ij->", M, M)))


@dataclass
class MetricsReport:
    r2: float
    dead_codes: float
    stability: float
    max_cosine: float
    ood_score: float
    stable_rank: float
    effective_rank: float
    coherence: float
    connectivity: float
    negative_interference: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        """Plain dict; NaN values become ``None`` so the JSON stays standard."""
        return {k: (None if isinstance(v, float) and np.isnan(v) else v)
                for k, v in asdict(self).items()}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def report(A, Z, D, A_hat=None, D_other=None, A_ref=None, **meta):
    """Evaluate the full metric suite.

    ``D`` is the atom matrix in the same coordinates as ``A``; dictionary
    and interference metrics use its unit-normalized rows. ``stability`` and
    ``max_cosine`` are NaN unless a second run's dictionary ``D_other`` is
    supplied. ``A_ref`` (defaults to ``A``) is the data the OOD score compares
    against.
    """
    A = as_matrix(A, "A")
    D = as_matrix(D, "D")
    if A_hat is None:
        A_hat = Z @ D
    Dn = normalize_rows(D)
    nan = float("nan")
    return MetricsReport(
        r2=r2(A, A_hat),
        dead_codes=dead_codes(Z),
        stability=stability(D, D_other) if D_other is not None else nan,
        max_cosine=max_cosine(D, D_other) if D_other is not None else nan,
        ood_score=ood_score(D, A if A_ref is None else A_ref),
        stable_rank=stable_rank(Dn),
        effective_rank=effective_rank(Dn),
        coherence=coherence(Dn) if D.shape[0] > 1 else nan,
        connectivity=connectivity(Z),
        negative_interference=negative_interference(Z, Dn),
        meta=dict(meta),
    )


def model_report(model, A, D_other=None, **meta):
    """:func:`report` for an :class:`~adl.training.SaeModel` on raw data ``A``."""
    X = model.standardizer.transform(A)
    Z = model.codes(X)
    meta.setdefault("variant", model.variant)
    meta.setdefault("k", model.n_atoms)
    meta.setdefault("l0_mean", float(np.count_nonzero(Z)) / max(Z.shape[0], 1))
    return report(X, Z, model.atoms(), D_other=D_other, **meta)


@dataclass
class StabilityResult:
    """``pairwise`` maps run-index pairs ``(i, j)`` to their stability."""

    mean: float
    pairwise: dict
    models: list = field(repr=False, default_factory=list)

    def __float__(self):
        return float(self.mean)


def stability_protocol(A, config, variant="topk", dict_kind="free", seeds=(0, 1, 2, 3),
                       C=None, distill_config=None):
    """Train one model per seed on unchanged data; mean pairwise stability.

    For archetypal runs the candidate set ``C`` is shared by every seed
    (distilled once when not supplied), so only the training seed varies.
    """
    from dataclasses import replace

    from .training import standardize_fit, train

    seeds = list(seeds)
    if len(seeds) < 2:
        raise InvalidInputError("stability needs at least two seeds")
    if dict_kind == "archetypal" and C is None:
        from .distillation import DistillConfig, distill

        X = standardize_fit(A)[1] if config.standardize else as_matrix(A, "A")
        C = distill(X, distill_config or DistillConfig(seed=config.seed))
    models = [train(A, replace(config, seed=s), variant, dict_kind, C=C) for s in seeds]
    pairwise = {}
    for i, j in itertools.combinations(range(len(seeds)), 2):
        pairwise[(i, j)] = stability(models[i].atoms(), models[j].atoms())
    mean = float(np.mean(list(pairwise.values())))
    return StabilityResult(mean=mean, pairwise=pairwise, models=models)
