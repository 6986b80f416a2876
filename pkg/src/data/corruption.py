"""
Corruption - Noise Processes for Denoising Training
===================================================

Turns a clean sample x into a corrupted x̃:
1. none           - x̃ = x (lets AE/CAE share the DAE/CDAE code path)
2. gaussian       - x̃ = x + N(0, σ²I), equal variance on every dimension
3. mask_indices   - zero the positions start, start+stride, ... (deterministic)
4. mask_fraction  - zero a uniformly random ⌊fraction·d⌋-subset (stochastic)

Indices are 0-based: the experiment's "1:80:784" pixel rule is
start_index=0, stride=80, which masks the same 10 pixels of every image.
"""

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict

import numpy as np

from src.utils.errors import ConfigError, IndexOutOfBoundsError
from src.utils.numerics import SeededRng

DEFAULT_SIGMA = 0.3
DEFAULT_STRIDE = 80


class CorruptionKind(Enum):
    NONE = "none"
    GAUSSIAN = "gaussian"
    MASK_INDICES = "mask_indices"
    MASK_FRACTION = "mask_fraction"


@dataclass(frozen=True)
class CorruptionSpec:
    """Which noise process corrupts the input, and its parameters"""
    kind: CorruptionKind = CorruptionKind.NONE
    sigma: float = DEFAULT_SIGMA
    stride: int = DEFAULT_STRIDE
    start_index: int = 0
    fraction: float = 0.1

    def __post_init__(self):
        if not isinstance(self.kind, CorruptionKind):
            object.__setattr__(self, "kind", CorruptionKind(self.kind))
        if self.kind is CorruptionKind.GAUSSIAN:
            if not self.sigma > 0:
                raise ConfigError(f"Gaussian corruption needs sigma > 0, got {self.sigma}",
                                  sigma=self.sigma)
            if self.sigma >= 0.5:
                warnings.warn(f"Gaussian sigma={self.sigma} is large; values below 0.5 are usual")
        if self.kind is CorruptionKind.MASK_INDICES:
            if self.stride < 1:
                raise ConfigError(f"Mask stride must be >= 1, got {self.stride}", stride=self.stride)
            if self.start_index < 0:
                raise ConfigError(f"Mask start must be >= 0, got {self.start_index}",
                                  start_index=self.start_index)
        if self.kind is CorruptionKind.MASK_FRACTION and not 0.0 <= self.fraction <= 1.0:
            raise ConfigError(f"Mask fraction must lie in [0, 1], got {self.fraction}",
                              fraction=self.fraction)

    @classmethod
    def none(cls) -> "CorruptionSpec":
        return cls(CorruptionKind.NONE)

    @classmethod
    def gaussian(cls, sigma: float = DEFAULT_SIGMA) -> "CorruptionSpec":
        return cls(CorruptionKind.GAUSSIAN, sigma=sigma)

    @classmethod
    def mask_indices(cls, stride: int = DEFAULT_STRIDE, start_index: int = 0) -> "CorruptionSpec":
        return cls(CorruptionKind.MASK_INDICES, stride=stride, start_index=start_index)

    @classmethod
    def mask_fraction(cls, fraction: float) -> "CorruptionSpec":
        return cls(CorruptionKind.MASK_FRACTION, fraction=fraction)

    @property
    def is_identity(self) -> bool:
        return self.kind is CorruptionKind.NONE

    def masked_positions(self, d: int) -> np.ndarray:
        """Positions zeroed by mask_indices on a d-dimensional input"""
        if self.start_index >= d:
            raise IndexOutOfBoundsError(
                f"Mask start index {self.start_index} is outside a {d}-dimensional input",
                start_index=self.start_index, dimension=int(d))
        return np.arange(self.start_index, d, self.stride)

    def masked_count(self, d: int) -> int:
        return math.ceil((d - self.start_index) / self.stride)

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is CorruptionKind.GAUSSIAN:
            doc["sigma"] = self.sigma
        elif self.kind is CorruptionKind.MASK_INDICES:
            doc["stride"] = self.stride
            doc["start_index"] = self.start_index
        elif self.kind is CorruptionKind.MASK_FRACTION:
            doc["fraction"] = self.fraction
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "CorruptionSpec":
        allowed = {"kind", "sigma", "stride", "start_index", "fraction"}
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"Unknown corruption fields: {sorted(unknown)}", fields=sorted(unknown))
        try:
            kind = CorruptionKind(doc.get("kind", "none"))
        except ValueError:
            raise ConfigError(f"Unknown corruption kind: {doc.get('kind')}", kind=doc.get("kind"))
        return cls(
            kind=kind,
            sigma=float(doc.get("sigma", DEFAULT_SIGMA)),
            stride=int(doc.get("stride", DEFAULT_STRIDE)),
            start_index=int(doc.get("start_index", 0)),
            fraction=float(doc.get("fraction", 0.1)),
        )


def corrupt_batch(spec: CorruptionSpec, X: np.ndarray, rng: SeededRng) -> np.ndarray:
    """
    Corrupt every row of an n × d batch

    Draws from rng only for the stochastic kinds; the input is never modified.
    """
    X = np.asarray(X, dtype=np.float64)
    if spec.kind is CorruptionKind.NONE:
        return X.copy()

    n, d = X.shape
    if spec.kind is CorruptionKind.GAUSSIAN:
        return X + spec.sigma * rng.standard_normal((n, d))

    corrupted = X.copy()
    if spec.kind is CorruptionKind.MASK_INDICES:
        corrupted[:, spec.masked_positions(d)] = 0.0
        return corrupted

    # MASK_FRACTION: the k smallest of d uniform keys pick a uniform k-subset
    k = int(math.floor(spec.fraction * d))
    if k == 0:
        return corrupted
    keys = rng.random((n, d))
    chosen = np.argsort(keys, axis=1, kind="stable")[:, :k]
    np.put_along_axis(corrupted, chosen, 0.0, axis=1)
    return corrupted


def corrupt(spec: CorruptionSpec, x: np.ndarray, rng: SeededRng) -> np.ndarray:
    """Corrupt a single sample x (1-D)"""
    x = np.asarray(x, dtype=np.float64)
    return corrupt_batch(spec, x[np.newaxis, :], rng)[0]
