"""Losses, analytic gradients, Adam, and the SAE training loop.

All losses and gradients are expressed in the model's working coordinates,
i.e. on standardized activations when the model carries a standardizer.
The reconstruction term is ``||A - Z D||_F^2 / n`` (mean over rows).
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .dictionaries import ArchetypalDictionary, FreeDictionary, normalize_rows
from .encoders import (
    EncoderParams,
    activation_mask,
    preactivation,
    silverman_kernel,
)
from .errors import InvalidInputError, TrainingDivergedError
from .numerics import as_matrix, make_rng

log = logging.getLogger(__name__)

VARIANTS = {"vanilla": "relu", "topk": "topk", "jump": "jumprelu"}


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    l1: float = 1e-3
    l0: float = 1e-3
    k_active: int = 8
    delta: float = 0.0
    seed: int = 0
    overcomplete_factor: float = 5.0
    n_atoms: int = None
    bandwidth: float = 1e-2
    theta_init: float = 0.1
    standardize: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInputError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")
        if self.epochs < 1:
            raise InvalidInputError("epochs must be >= 1")
        if not self.delta >= 0:
            raise InvalidInputError("delta must be >= 0")
        if self.n_atoms is not None and self.n_atoms < 1:
            raise InvalidInputError("n_atoms must be >= 1")

    def atoms_for(self, d):
        if self.n_atoms is not None:
            return int(self.n_atoms)
        return max(1, int(round(self.overcomplete_factor * d)))


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, A):
        return (np.asarray(A, dtype=np.float64) - self.mean) / self.std

    def inverse(self, A_std):
        return np.asarray(A_std) * self.std + self.mean

    @classmethod
    def identity(cls, d):
        return cls(mean=np.zeros(d), std=np.ones(d))


def standardize_fit(A):
    """Per-feature zero mean and unit (population) std.

    Features with std below 1e-12 keep a divisor of 1, so a constant column
    maps to zeros.
    """
    A = as_matrix(A, "A")
    if A.shape[0] < 2:
        raise InvalidInputError("standardization needs at least 2 rows")
    mean = A.mean(axis=0)
    std = A.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    st = Standardizer(mean=mean, std=std)
    return st, st.transform(A)


@dataclass
class SaeModel:
    encoder: EncoderParams
    dictionary: object
    standardizer: Standardizer
    variant: str = "topk"
    history: list = field(default_factory=list, repr=False)

    @property
    def n_atoms(self):
        return self.encoder.n_atoms

    def atoms(self):
        """Atoms in working (standardized) coordinates."""
        return self.dictionary.atoms()

    def raw_atoms(self):
        """Atoms mapped back to input coordinates (column-scaled by the std)."""
        return self.atoms() * self.standardizer.std

    def codes(self, A_std):
        return _forward(A_std, self)[2]

    def encode(self, A):
        """Codes for raw input rows (standardizer applied first)."""
        return self.codes(self.standardizer.transform(A))

    def reconstruct(self, A):
        """Raw-space reconstruction of raw input rows."""
        Z = self.encode(A)
        return self.standardizer.inverse(Z @ self.atoms())


def _forward(A, model):
    P = preactivation(A, model.encoder)
    M = activation_mask(P, model.encoder)
    Z = np.where(M, P, 0.0)
    return P, M, Z


def reconstruction_loss(A, model, l1=None, l0=None, penalty=True):
    """Mean-over-rows squared reconstruction error plus the variant's penalty.

    ``l1`` (vanilla) and ``l0`` (jump) default to zero when not given.
    """
    A = as_matrix(A, "A")
    P, M, Z = _forward(A, model)
    D = model.atoms()
    if D.shape[1] != A.shape[1]:
        raise InvalidInputError("dictionary width does not match A")
    R = Z @ D - A
    n = A.shape[0]
    loss = float(np.einsum("ij,ij->", R, R)) / n
    if penalty:
        if model.variant == "vanilla" and l1:
            loss += l1 * float(Z.sum()) / n
        elif model.variant == "jump" and l0:
            loss += l0 * float(M.sum()) / n
    return loss


def _forward_backward(A, model, l1=0.0, l0=0.0):
    n = A.shape[0]
    enc = model.encoder
    P, M, Z = _forward(A, model)
    D = model.atoms()
    R = Z @ D - A
    sse = float(np.einsum("ij,ij->", R, R))
    loss = sse / n

    dZ = (2.0 / n) * (R @ D.T)
    dD = (2.0 / n) * (Z.T @ R)
    if model.variant == "vanilla" and l1:
        loss += l1 * float(Z.sum()) / n
        dZ += l1 / n
    dP = np.where(M, dZ, 0.0)
    grads = {"W_enc": A.T @ dP, "b": dP.sum(axis=0)}

    if model.variant == "jump":
        theta = enc.theta
        kern = silverman_kernel((P - theta) / enc.bandwidth) / enc.bandwidth
        d_theta = -(theta * (dZ * kern).sum(axis=0))
        if l0:
            loss += l0 * float(M.sum()) / n
            d_theta -= (l0 / n) * kern.sum(axis=0)
        grads["log_theta"] = theta * d_theta

    if isinstance(model.dictionary, ArchetypalDictionary):
        grads["W"] = dD @ model.dictionary.C.T
        grads["Lambda"] = dD
    else:
        grads["D"] = dD
    return loss, grads, Z, sse


def gradients(batch, model, l1=0.0, l0=0.0):
    """Analytic gradients of :func:`reconstruction_loss` at the current parameters.

    Keys: ``W_enc``, ``b``, then ``D`` (free) or ``W`` and ``Lambda``
    (archetypal), plus ``log_theta`` for JumpReLU. The decoder gradient is
    ``2 (Z^T Z D - Z^T A) / n``; archetypal gradients chain through
    ``D = W C + Lambda``. Threshold gradients use the Silverman-kernel
    straight-through estimate and are not exact derivatives.
    """
    batch = as_matrix(batch, "batch")
    return _forward_backward(batch, model, l1=l1, l0=l0)[1]


class Adam:
    """Adam with bias correction, updating arrays in place."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _parameters(model):
    p = {"W_enc": model.encoder.W_enc, "b": model.encoder.b}
    if model.encoder.log_theta is not None:
        p["log_theta"] = model.encoder.log_theta
    if isinstance(model.dictionary, ArchetypalDictionary):
        p["W"] = model.dictionary.W
        p["Lambda"] = model.dictionary.Lambda
    else:
        p["D"] = model.dictionary.D
    return p


def _project(model):
    if isinstance(model.dictionary, ArchetypalDictionary):
        model.dictionary.project()
    else:
        model.dictionary.renormalize()


def _check_invariants(model, step):
    dic = model.dictionary
    if isinstance(dic, ArchetypalDictionary):
        assert np.all(dic.W >= 0), f"negative W at step {step}"
        assert np.allclose(dic.W.sum(axis=1), 1.0, atol=1e-9), f"W not stochastic at {step}"
        assert np.all(np.linalg.norm(dic.Lambda, axis=1) <= dic.delta + 1e-9)
    else:
        assert np.allclose(np.linalg.norm(dic.D, axis=1), 1.0, atol=1e-9)


def _batch_r2(A, sse):
    centered = A - A.mean(axis=0)
    denom = float(np.einsum("ij,ij->", centered, centered))
    return 1.0 - sse / denom if denom > 0 else float("nan")


def init_model(d, config, variant="topk", dict_kind="free", C=None,
               standardizer=None, rng=None):
    """Fresh model with the initializations used by :func:`train`."""
    if variant not in VARIANTS:
        raise InvalidInputError(f"unknown variant {variant!r}")
    rng = make_rng(config.seed) if rng is None else rng
    k = config.atoms_for(d)
    k_active = min(config.k_active, k) if variant == "topk" else None
    encoder = EncoderParams.initialize(
        d, k, rng, nonlinearity=VARIANTS[variant], k_active=k_active,
        theta_init=config.theta_init, bandwidth=config.bandwidth,
    )
    if dict_kind == "archetypal":
        if C is None:
            raise InvalidInputError("archetypal dictionary needs candidate archetypes C")
        C = as_matrix(C, "C")
        if C.shape[1] != d:
            raise InvalidInputError(f"C has width {C.shape[1]}, data has {d}")
        dictionary = ArchetypalDictionary.initialize(C, k, delta=config.delta)
    elif dict_kind == "free":
        dictionary = FreeDictionary(normalize_rows(rng.standard_normal((k, d))))
    else:
        raise InvalidInputError(f"unknown dictionary kind {dict_kind!r}")
    if standardizer is None:
        standardizer = Standardizer.identity(d)
    return SaeModel(encoder=encoder, dictionary=dictionary,
                    standardizer=standardizer, variant=variant)


def train(A, config=None, variant="topk", dict_kind="free", C=None,
          distill_config=None, debug=False):
    """Train an SAE on the rows of ``A``.

    Parameters
    ----------
    A : ndarray (n, d)
        Raw activations. Standardized internally when ``config.standardize``.
    config : TrainConfig
    variant : {"vanilla", "topk", "jump"}
    dict_kind : {"free", "archetypal"}
    C : ndarray (n', d), optional
        Candidate archetypes in standardized coordinates. When omitted for an
        archetypal model they are distilled from the standardized data with
        ``distill_config``.
    debug : bool
        Assert dictionary invariants after every optimizer step.

    Returns
    -------
    SaeModel
        ``model.history`` holds ``(step, loss, r2_batch, l0_mean)`` rows.
    """
    config = config or TrainConfig()
    A = as_matrix(A, "A")
    n, d = A.shape
    if config.standardize:
        standardizer, X = standardize_fit(A)
    else:
        standardizer, X = Standardizer.identity(d), A

    if dict_kind == "archetypal" and C is None:
        from .distillation import DistillConfig, distill

        C = distill(X, distill_config or DistillConfig(seed=config.seed))

    seq = np.random.SeedSequence(int(config.seed))
    init_seq, shuffle_seq = seq.spawn(2)
    rng_init = np.random.Generator(np.random.PCG64(init_seq))
    rng_shuffle = np.random.Generator(np.random.PCG64(shuffle_seq))

    model = init_model(d, config, variant, dict_kind, C, standardizer, rng_init)
    opt = Adam(config.learning_rate, config.beta1, config.beta2, config.eps)
    l1 = config.l1 if variant == "vanilla" else 0.0
    l0 = config.l0 if variant == "jump" else 0.0

    bs = min(config.batch_size, n)
    step = 0
    history = []
    _project(model)
    for epoch in range(config.epochs):
        order = rng_shuffle.permutation(n)
        for start in range(0, n, bs):
            batch = X[order[start:start + bs]]
            loss, grads, Z, sse = _forward_backward(batch, model, l1=l1, l0=l0)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise TrainingDivergedError(step, loss)
            opt.step(_parameters(model), grads)
            _project(model)
            if debug:
                _check_invariants(model, step)
            history.append((step, loss, _batch_r2(batch, sse),
                            float(np.count_nonzero(Z)) / Z.shape[0]))
            step += 1
        log.debug("epoch %d loss %.6f", epoch, history[-1][1])
    _project(model)
    model.history = history
    return model
