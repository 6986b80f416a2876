"""
Auto-Encoder Layer - Encode, Decode, Objectives and Exact Gradients
===================================================================

One tied-weight autoencoder layer:

    h     = act(W x̃ + b)          (encode, x̃ = corrupted x or x itself)
    x_rec = act(Wᵀ h + c)         (decode with the SAME W, transposed)

and the four objectives built on top of it:

    AE    L(x, x_rec)                          x_rec from clean x
    DAE   L(x, x_rec)                          x_rec from corrupted x̃
    CAE   L(x, x_rec) + λ‖J_h(x)‖²_F
    CDAE  L(x, x_rec) + λ‖J_h(x̃)‖²_F          x_rec and J both from x̃

The reconstruction target is always the clean x. Gradients are derived by
hand (no autodiff) and include both tied-weight paths plus the full chain
rule through the contractive penalty.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.data.corruption import CorruptionSpec, corrupt_batch
from src.utils.errors import ConfigError, DimensionError, DomainError
from src.utils.numerics import (
    RNG_ALGORITHM,
    ActivationKind,
    SeededRng,
    activate,
    activate_prime_from_output,
    activate_second_from_output,
    check_dim,
    init_weights,
)

DEFAULT_LAMBDA = 0.1
PARAMS_FORMAT = "cdae-autoencoder"
PARAMS_VERSION = 1


class VariantTag(Enum):
    AE = "AE"
    DAE = "DAE"
    CAE = "CAE"
    CDAE = "CDAE"

    @property
    def uses_penalty(self) -> bool:
        return self in (VariantTag.CAE, VariantTag.CDAE)

    @property
    def uses_corruption(self) -> bool:
        return self in (VariantTag.DAE, VariantTag.CDAE)


class LossKind(Enum):
    SQUARED = "squared"
    CROSS_ENTROPY = "cross_entropy"


@dataclass(frozen=True)
class Variant:
    """
    Which objective to train

    AE   - no penalty, no corruption
    DAE  - corruption only
    CAE  - penalty only (λ may be 0)
    CDAE - both (either may be degenerate: λ=0 or corruption none)
    """
    tag: VariantTag
    lam: Optional[float] = None
    corruption: CorruptionSpec = field(default_factory=CorruptionSpec.none)

    def __post_init__(self):
        if not isinstance(self.tag, VariantTag):
            object.__setattr__(self, "tag", VariantTag(self.tag))
        if self.tag.uses_penalty:
            if self.lam is None:
                object.__setattr__(self, "lam", DEFAULT_LAMBDA)
            if self.lam < 0:
                raise ConfigError(f"Penalty weight must be >= 0, got {self.lam}", lam=self.lam)
        elif self.lam is not None:
            raise ConfigError(f"{self.tag.value} takes no penalty weight", lam=self.lam)
        if not self.tag.uses_corruption and not self.corruption.is_identity:
            raise ConfigError(f"{self.tag.value} takes no corruption",
                              corruption=self.corruption.to_dict())

    @classmethod
    def ae(cls) -> "Variant":
        return cls(VariantTag.AE)

    @classmethod
    def dae(cls, corruption: CorruptionSpec) -> "Variant":
        return cls(VariantTag.DAE, corruption=corruption)

    @classmethod
    def cae(cls, lam: float = DEFAULT_LAMBDA) -> "Variant":
        return cls(VariantTag.CAE, lam=lam)

    @classmethod
    def cdae(cls, corruption: CorruptionSpec, lam: float = DEFAULT_LAMBDA) -> "Variant":
        return cls(VariantTag.CDAE, lam=lam, corruption=corruption)

    @property
    def penalty_weight(self) -> float:
        return float(self.lam) if self.lam is not None else 0.0

    def with_corruption(self, corruption: CorruptionSpec) -> "Variant":
        if not self.tag.uses_corruption:
            return self
        return replace(self, corruption=corruption)

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"tag": self.tag.value}
        if self.tag.uses_penalty:
            doc["lambda"] = self.lam
        if self.tag.uses_corruption:
            doc["corruption"] = self.corruption.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "Variant":
        unknown = set(doc) - {"tag", "lambda", "corruption"}
        if unknown:
            raise ConfigError(f"Unknown variant fields: {sorted(unknown)}", fields=sorted(unknown))
        try:
            tag = VariantTag(str(doc["tag"]).upper())
        except (KeyError, ValueError):
            raise ConfigError(f"Unknown or missing variant tag: {doc.get('tag')}")
        lam = doc.get("lambda")
        corruption = CorruptionSpec.from_dict(doc.get("corruption", {"kind": "none"}))
        return cls(tag, lam=None if lam is None else float(lam), corruption=corruption)


@dataclass
class AutoEncoderParams:
    """Tied-weight parameters: W (d_h × d_v), hidden bias b (d_h), output bias c (d_v)"""
    W: np.ndarray
    b: np.ndarray
    c: np.ndarray
    activation: ActivationKind = ActivationKind.SIGMOID

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.c = np.asarray(self.c, dtype=np.float64)
        if not isinstance(self.activation, ActivationKind):
            self.activation = ActivationKind(self.activation)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],) or self.c.shape != (self.W.shape[1],):
            raise DimensionError(
                f"Inconsistent parameter shapes W{self.W.shape} b{self.b.shape} c{self.c.shape}",
                W=list(self.W.shape), b=list(self.b.shape), c=list(self.c.shape))

    @property
    def d_h(self) -> int:
        return self.W.shape[0]

    @property
    def d_v(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "AutoEncoderParams":
        return AutoEncoderParams(self.W.copy(), self.b.copy(), self.c.copy(), self.activation)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": PARAMS_FORMAT,
            "version": PARAMS_VERSION,
            "rng_algorithm": RNG_ALGORITHM,
            "d_v": self.d_v,
            "d_h": self.d_h,
            "activation": self.activation.value,
            "W": self.W.ravel().tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "AutoEncoderParams":
        if doc.get("format") != PARAMS_FORMAT or doc.get("version") != PARAMS_VERSION:
            raise ConfigError("Not an autoencoder parameter document",
                              format=doc.get("format"), version=doc.get("version"))
        d_h, d_v = int(doc["d_h"]), int(doc["d_v"])
        W = np.asarray(doc["W"], dtype=np.float64)
        if W.size != d_h * d_v:
            raise DimensionError(f"W has {W.size} entries, expected {d_h * d_v}")
        return cls(W.reshape(d_h, d_v), np.asarray(doc["b"]), np.asarray(doc["c"]),
                   ActivationKind(doc["activation"]))


def init_params(d_v: int, d_h: int, activation: ActivationKind, rng: SeededRng) -> AutoEncoderParams:
    """Uniform W in the ±√6/√(d_v+d_h) range, zero biases"""
    return AutoEncoderParams(init_weights(d_h, d_v, rng), np.zeros(d_h), np.zeros(d_v), activation)


def encode(params: AutoEncoderParams, x: np.ndarray) -> np.ndarray:
    """h = act(W x + b); x may be one vector or an n × d_v batch"""
    x = np.asarray(x, dtype=np.float64)
    check_dim(x, params.d_v, "encode input")
    return activate(params.activation, x @ params.W.T + params.b)


def decode(params: AutoEncoderParams, h: np.ndarray) -> np.ndarray:
    """x_rec = act(Wᵀ h + c); h may be one vector or an n × d_h batch"""
    h = np.asarray(h, dtype=np.float64)
    check_dim(h, params.d_h, "decode input")
    return activate(params.activation, h @ params.W + params.c)


def _as_probability(values: np.ndarray, activation: ActivationKind) -> np.ndarray:
    # tanh outputs live in (-1, 1); map them onto (0, 1)
    if activation is ActivationKind.TANH:
        return 0.5 * (1.0 + values)
    return values


def reconstruction_loss(kind: LossKind, x: np.ndarray, x_rec: np.ndarray,
                        activation: ActivationKind = ActivationKind.SIGMOID) -> float:
    """
    Sum over components of one sample's reconstruction error

    squared:       Σ (x_i - x_rec_i)²
    cross_entropy: -Σ [t_i log p_i + (1 - t_i) log(1 - p_i)]
                   with t = x, p = x_rec for sigmoid and t = (1+x)/2,
                   p = (1+x_rec)/2 for tanh
    """
    x = np.asarray(x, dtype=np.float64)
    x_rec = np.asarray(x_rec, dtype=np.float64)
    if x.shape != x_rec.shape:
        raise DimensionError(f"Loss needs equal shapes, got {x.shape} and {x_rec.shape}",
                             x=list(x.shape), x_rec=list(x_rec.shape))
    if kind is LossKind.SQUARED:
        return float(np.sum((x - x_rec) ** 2))
    return float(np.sum(_cross_entropy_terms(x, x_rec, activation)))


def _cross_entropy_terms(x: np.ndarray, x_rec: np.ndarray, activation: ActivationKind) -> np.ndarray:
    t = _as_probability(x, activation)
    p = _as_probability(x_rec, activation)
    if not (np.all(p > 0.0) and np.all(p < 1.0)):
        raise DomainError("Cross-entropy needs reconstructions strictly inside the activation range")
    if not (np.all(t >= 0.0) and np.all(t <= 1.0)):
        raise DomainError("Cross-entropy needs targets inside the activation range")
    return -(t * np.log(p) + (1.0 - t) * np.log1p(-p))


def jacobian(params: AutoEncoderParams, h: np.ndarray) -> np.ndarray:
    """Explicit d_h × d_v Jacobian J_ij = act'(h_i)·W_ij of the encoder"""
    h = np.asarray(h, dtype=np.float64)
    check_dim(h, params.d_h, "jacobian hidden vector")
    return activate_prime_from_output(params.activation, h)[:, np.newaxis] * params.W


def contractive_penalty(params: AutoEncoderParams, h: np.ndarray) -> float:
    """
    ‖J_h(x)‖²_F in closed form: Σ_i act'(h_i)² Σ_j W_ij²

    h must be the encoding (under these params) of the point the Jacobian
    is taken at.
    """
    h = np.asarray(h, dtype=np.float64)
    check_dim(h, params.d_h, "penalty hidden vector")
    g = activate_prime_from_output(params.activation, h)
    row_norms = np.sum(params.W ** 2, axis=1)
    return float(np.sum(g ** 2 * row_norms))


@dataclass
class ObjectiveCache:
    """Intermediate values of one forward pass, reused by the backward pass"""
    x: np.ndarray
    x_tilde: np.ndarray
    h: np.ndarray
    x_rec: np.ndarray
    reconstruction: float
    penalty: float


def _corrupted_input(variant: Variant, X: np.ndarray, rng: Optional[SeededRng]) -> np.ndarray:
    if variant.corruption.is_identity:
        return X
    if rng is None:
        raise ConfigError(f"{variant.tag.value} with corruption needs a random stream")
    return corrupt_batch(variant.corruption, X, rng)


def _forward(variant: Variant, params: AutoEncoderParams, X: np.ndarray,
             loss_kind: LossKind, X_tilde: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-sample reconstruction and penalty terms for a batch"""
    H = encode(params, X_tilde)
    R = decode(params, H)
    if loss_kind is LossKind.SQUARED:
        rec = np.sum((X - R) ** 2, axis=1)
    else:
        rec = np.sum(_cross_entropy_terms(X, R, params.activation), axis=1)
    if variant.penalty_weight > 0.0:
        g = activate_prime_from_output(params.activation, H)
        pen = (g ** 2) @ np.sum(params.W ** 2, axis=1)
    else:
        pen = np.zeros(X.shape[0])
    return H, R, rec, pen


def objective(variant: Variant, params: AutoEncoderParams, x: np.ndarray,
              rng: Optional[SeededRng] = None, loss_kind: LossKind = LossKind.SQUARED,
              x_tilde: Optional[np.ndarray] = None) -> Tuple[float, ObjectiveCache]:
    """
    Objective value for one sample x plus the cache of its forward pass

    x_tilde freezes the corruption (used by finite-difference checks);
    otherwise it is drawn from rng.
    """
    x = np.asarray(x, dtype=np.float64)
    check_dim(x, params.d_v, "objective input")
    X = x[np.newaxis, :]
    if x_tilde is None:
        X_tilde = _corrupted_input(variant, X, rng)
    else:
        X_tilde = np.asarray(x_tilde, dtype=np.float64).reshape(1, -1)
    H, R, rec, pen = _forward(variant, params, X, loss_kind, X_tilde)
    reconstruction = float(rec[0])
    penalty = float(pen[0])
    if variant.penalty_weight > 0.0:
        loss = reconstruction + variant.penalty_weight * penalty
    else:
        loss = reconstruction
    return loss, ObjectiveCache(x, X_tilde[0], H[0], R[0], reconstruction, penalty)


def batch_objective(variant: Variant, params: AutoEncoderParams, X: np.ndarray,
                    loss_kind: LossKind, X_tilde: np.ndarray) -> Tuple[float, float, float]:
    """
    Minibatch-mean objective with a frozen corrupted batch

    Returns (total, mean reconstruction, mean penalty) with
    total = reconstruction + λ·penalty.
    """
    X = np.asarray(X, dtype=np.float64)
    _, _, rec, pen = _forward(variant, params, X, loss_kind, np.asarray(X_tilde, dtype=np.float64))
    reconstruction = float(np.mean(rec))
    penalty = float(np.mean(pen))
    if variant.penalty_weight > 0.0:
        return reconstruction + variant.penalty_weight * penalty, reconstruction, penalty
    return reconstruction, reconstruction, penalty


@dataclass
class Gradients:
    """Gradients of the minibatch-mean objective"""
    W: np.ndarray
    b: np.ndarray
    c: np.ndarray
    loss: float
    reconstruction: float = 0.0
    penalty: float = 0.0


def gradients(variant: Variant, params: AutoEncoderParams, minibatch: np.ndarray,
              rng: Optional[SeededRng] = None, loss_kind: LossKind = LossKind.SQUARED,
              X_tilde: Optional[np.ndarray] = None) -> Gradients:
    """
    Exact gradients of the minibatch-mean objective w.r.t. W, b and c

    Backward pass (per sample, then averaged):
        δ2   = ∂L/∂(Wᵀh + c)
        ∂/∂c = δ2,   ∂/∂W += h δ2ᵀ                     (decoder path)
        ∂/∂h = W δ2 + λ·2·g·g'·‖W_i‖²                   (g = act'(h))
        δ1   = ∂/∂h ⊙ g
        ∂/∂b = δ1,   ∂/∂W += δ1 x̃ᵀ + λ·2·g²·W           (encoder path + penalty)
    """
    X = np.asarray(minibatch, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionError("Gradients need a non-empty minibatch", shape=list(X.shape))
    check_dim(X, params.d_v, "minibatch")
    if X_tilde is None:
        X_tilde = _corrupted_input(variant, X, rng)
    else:
        X_tilde = np.asarray(X_tilde, dtype=np.float64)
    n = X.shape[0]
    act = params.activation
    lam = variant.penalty_weight

    H, R, rec, pen = _forward(variant, params, X, loss_kind, X_tilde)

    if loss_kind is LossKind.SQUARED:
        delta2 = 2.0 * (R - X) * activate_prime_from_output(act, R)
    else:
        # the log-loss derivative cancels the activation derivative exactly
        delta2 = R - X

    grad_c = delta2.sum(axis=0) / n
    grad_W = H.T @ delta2
    dH = delta2 @ params.W.T

    g = activate_prime_from_output(act, H)
    if lam > 0.0:
        row_norms = np.sum(params.W ** 2, axis=1)
        dH = dH + lam * 2.0 * g * activate_second_from_output(act, H) * row_norms
    delta1 = dH * g

    grad_b = delta1.sum(axis=0) / n
    grad_W = grad_W + delta1.T @ X_tilde
    if lam > 0.0:
        grad_W = grad_W + lam * 2.0 * np.sum(g ** 2, axis=0)[:, np.newaxis] * params.W
    grad_W = grad_W / n

    reconstruction = float(np.mean(rec))
    penalty = float(np.mean(pen))
    loss = reconstruction + lam * penalty if lam > 0.0 else reconstruction
    return Gradients(grad_W, grad_b, grad_c, loss, reconstruction, penalty)
