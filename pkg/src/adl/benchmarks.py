"""Synthetic plausibility and soft-identifiability benchmarks.

Collage images seen through a frozen backbone are replaced by a surrogate:
each sample mixes a few ground-truth unit directions with positive gains and
adds isotropic Gaussian noise. Scoring follows the definitions used on real
activations.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError, UndefinedClassError
from .numerics import as_matrix, make_rng

GAIN_RANGE = (0.5, 1.5)


@dataclass
class IdentifiabilityDataset:
    X: np.ndarray
    Y: np.ndarray
    prototypes: np.ndarray
    objects_per_image: int

    def split(self, frac=0.5):
        """First ``frac`` of the rows for fitting, the rest for evaluation."""
        cut = int(round(self.X.shape[0] * frac))
        return (self.X[:cut], self.Y[:cut]), (self.X[cut:], self.Y[cut:])


def random_directions(c, d, rng, orthonormal=True):
    """``c`` unit rows in ``R^d``; orthonormalized by QR when ``orthonormal``."""
    G = rng.standard_normal((c, d))
    if orthonormal:
        if c > d:
            raise InvalidInputError(f"cannot decorrelate c={c} directions in d={d}")
        Q, R = np.linalg.qr(G.T)
        Q = Q * np.sign(np.diag(R))
        return Q.T.copy()
    return G / np.linalg.norm(G, axis=1, keepdims=True)


def _choose_subsets(n, c, m, rng):
    return np.argsort(rng.random((n, c)), axis=1, kind="stable")[:, :m]


def gen_identifiability(c=12, d=64, n=4000, objects_per_image=4, noise_std=0.05,
                        rng=0, decorrelate=True):
    """Collage surrogate: each row is the mean of ``objects_per_image`` distinct
    prototypes scaled by gains in ``[0.5, 1.5]``, plus noise.

    The original benchmark uses between 9 and 20 objects.
    """
    if not 1 <= objects_per_image <= c:
        raise InvalidInputError(f"objects_per_image must be in [1, {c}]")
    rng = make_rng(rng)
    protos = random_directions(c, d, rng, orthonormal=decorrelate)
    chosen = _choose_subsets(n, c, objects_per_image, rng)
    gains = rng.uniform(*GAIN_RANGE, size=(n, objects_per_image))
    coef = np.zeros((n, c))
    np.put_along_axis(coef, chosen, gains, axis=1)
    Y = (coef > 0).astype(np.float64)
    X = (coef @ protos) / objects_per_image
    if noise_std > 0:
        X = X + noise_std * rng.standard_normal((n, d))
    return IdentifiabilityDataset(X=X, Y=Y, prototypes=protos,
                                  objects_per_image=objects_per_image)


def _sparse_mixture(V, n, sparsity, noise_std, rng):
    c, d = V.shape
    chosen = _choose_subsets(n, c, sparsity, rng)
    coef = np.zeros((n, c))
    np.put_along_axis(coef, chosen, rng.uniform(*GAIN_RANGE, size=(n, sparsity)), axis=1)
    X = coef @ V
    if noise_std > 0:
        X = X + noise_std * rng.standard_normal((n, d))
    return X, coef


def gen_plausibility(c=32, d=64, n=4000, sparsity=4, noise_std=0.05, rng=0):
    """Rows are nonnegative ``sparsity``-term combinations of orthonormal
    directions ``V`` plus noise. Returns ``(X, V)``; ``V`` doubles as the
    ground-truth classification directions.
    """
    if c > d:
        raise InvalidInputError(f"c={c} exceeds d={d}")
    if not 1 <= sparsity <= c:
        raise InvalidInputError(f"sparsity must be in [1, {c}]")
    rng = make_rng(rng)
    V = random_directions(c, d, rng, orthonormal=True)
    X, _ = _sparse_mixture(V, n, sparsity, noise_std, rng)
    return X, V


def gen_planted(n=10_000, d=64, c=96, sparsity=8, noise_std=0.05, rng=0):
    """Planted sparse nonnegative model with ``c`` random unit directions
    (``c`` may exceed ``d``). Returns ``(X, V, coefficients)``.
    """
    if not 1 <= sparsity <= c:
        raise InvalidInputError(f"sparsity must be in [1, {c}]")
    rng = make_rng(rng)
    V = random_directions(c, d, rng, orthonormal=False)
    X, coef = _sparse_mixture(V, n, sparsity, noise_std, rng)
    return X, V, coef


def plausibility_score(D, V):
    """Mean over ground-truth directions of the best atom alignment."""
    D = as_matrix(D, "D")
    V = as_matrix(V, "V")
    if D.shape[0] == 0:
        raise InvalidInputError("dictionary is empty")
    Dn = D / np.where(np.linalg.norm(D, axis=1, keepdims=True) > 0,
                      np.linalg.norm(D, axis=1, keepdims=True), 1.0)
    Vn = V / np.linalg.norm(V, axis=1, keepdims=True)
    return float(np.mean(np.max(Vn @ Dn.T, axis=1)))


def percentile_thresholds(Z_ref):
    """Per-concept 1st..100th percentiles (order statistics) plus ``+inf``.

    The ``+inf`` row makes the all-negative prediction part of every scan.
    """
    q = np.percentile(Z_ref, np.arange(1, 101), axis=0, method="lower")
    return np.vstack([q, np.full((1, Z_ref.shape[1]), np.inf)])


def identifiability_accuracy(Z, Y, Z_ref=None):
    """Per-class best single-concept threshold accuracy and its mean.

    For each class ``j``: the max over concepts ``i`` and thresholds ``lam``
    (percentiles of ``Z_ref[:, i]``, default ``Z``) of the fraction of rows
    where ``Z[:, i] > lam`` agrees with ``Y[:, j]``.
    """
    Z = as_matrix(Z, "Z")
    Y = as_matrix(Y, "Y")
    if Z.shape[0] != Y.shape[0]:
        raise InvalidInputError(f"row counts differ: {Z.shape[0]} vs {Y.shape[0]}")
    prev = Y.mean(axis=0)
    degenerate = np.flatnonzero((prev == 0) | (prev == 1))
    if degenerate.size:
        raise UndefinedClassError(degenerate.tolist())
    Z_ref = Z if Z_ref is None else as_matrix(Z_ref, "Z_ref")
    thr = percentile_thresholds(Z_ref)
    n = Z.shape[0]
    pos = Y.sum(axis=0)
    best = np.zeros(Y.shape[1])
    for i in range(Z.shape[1]):
        pred = (Z[:, i][:, None] > thr[:, i][None, :]).astype(np.float64)
        tp = pred.T @ Y
        pred_pos = pred.sum(axis=0)[:, None]
        # agreement = TP + TN, TN = n - pred_pos - pos + TP
        acc = (2.0 * tp + n - pred_pos - pos[None, :]) / n
        best = np.maximum(best, acc.max(axis=0))
    return best, float(best.mean())


# ---------------------------------------------------------------- harnesses

SAE_METHODS = {
    "vanilla": ("vanilla", "free"),
    "topk": ("topk", "free"),
    "jump": ("jump", "free"),
    "a-sae": ("topk", "archetypal"),
    "ra-sae": ("topk", "archetypal"),
}
BASELINE_METHODS = ("seminmf", "convexnmf", "pca", "kmeans")
METHODS = tuple(SAE_METHODS) + BASELINE_METHODS + ("oracle",)


@dataclass
class BenchSettings:
    """Shared knobs for benchmark runs."""

    train: object = None
    ra_delta: float = 0.1
    n_prime: int = 512
    kmeans_iters: int = 50
    nmf_iters: int = 1000
    nmf_l1: float = 0.0
    seed: int = 0
    extra: dict = field(default_factory=dict)


def _oracle_codes(A, T):
    """ReLU projections onto the true directions; roundoff-sized entries
    (below 1e-12 of the row norm) are set to exact zeros."""
    A = np.asarray(A, dtype=np.float64)
    Z = np.maximum(A @ T.T, 0.0)
    Z[Z <= 1e-12 * np.linalg.norm(A, axis=1, keepdims=True)] = 0.0
    return Z


def fit_method(method, X_raw, k, settings, truth=None):
    """Fit ``method`` with ``k`` atoms on raw rows.

    Returns ``(codes_fn, raw_atoms)`` where ``codes_fn`` maps raw rows to codes
    and ``raw_atoms`` are the atoms in input coordinates.
    """
    from .baselines import fit_convexnmf, fit_kmeans_coding, fit_pca, fit_seminmf
    from .distillation import DistillConfig, distill
    from .training import TrainConfig, standardize_fit, train

    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}")
    if method == "oracle":
        if truth is None:
            raise InvalidInputError("oracle method needs ground-truth directions")
        T = np.asarray(truth)
        return (lambda A: _oracle_codes(A, T)), T

    base = settings.train or TrainConfig()
    std, X = standardize_fit(X_raw)
    if method in SAE_METHODS:
        variant, kind = SAE_METHODS[method]
        delta = 0.0 if method != "ra-sae" else settings.ra_delta
        cfg = replace(base, n_atoms=k, delta=delta, seed=settings.seed)
        C = None
        if kind == "archetypal":
            n_prime = min(settings.n_prime, X.shape[0])
            C = distill(X, DistillConfig(n_prime=n_prime, kmeans_iters=settings.kmeans_iters,
                                         seed=settings.seed))
        model = train(X_raw, cfg, variant, kind, C=C)
        return model.encode, model.raw_atoms()

    if method == "seminmf":
        bm = fit_seminmf(X, k, l1=settings.nmf_l1, iters=settings.nmf_iters, rng=settings.seed)
    elif method == "convexnmf":
        bm = fit_convexnmf(X, k, l1=settings.nmf_l1, iters=settings.nmf_iters, rng=settings.seed)
    elif method == "pca":
        bm = fit_pca(X, min(k, *X.shape))
    else:
        bm = fit_kmeans_coding(X, k, rng=settings.seed)
    return (lambda A: bm.transform(std.transform(A))), bm.D * std.std


def run_identifiability(dataset, methods, settings=None):
    """Accuracy rows ``{method: (per_class, mean)}`` with dictionary size ``c``.

    Methods fit on the first half of the rows; thresholds come from codes on
    that half and accuracy is measured on the second half.
    """
    settings = settings or BenchSettings()
    (X_tr, _), (X_te, Y_te) = dataset.split(0.5)
    c = dataset.Y.shape[1]
    rows = {}
    for method in methods:
        codes_fn, _ = fit_method(method, X_tr, c, settings, truth=dataset.prototypes)
        rows[method] = identifiability_accuracy(codes_fn(X_te), Y_te, Z_ref=codes_fn(X_tr))
    return rows


def run_plausibility(X, V, methods, dict_sizes, settings=None):
    """Plausibility rows ``{method: {k: score}}``."""
    settings = settings or BenchSettings()
    rows = {}
    for method in methods:
        rows[method] = {}
        for k in dict_sizes:
            _, atoms = fit_method(method, X, k, settings, truth=V)
            rows[method][k] = plausibility_score(atoms, V)
    return rows
