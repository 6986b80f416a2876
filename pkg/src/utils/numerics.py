"""
Numerics - Dense Arithmetic, Activations and Seeded Randomness
==============================================================

The small numerical toolkit everything else is built on:
1. Activation functions (sigmoid, tanh) and their derivatives
2. Seeded, platform-stable random streams
3. Weight initialization for one autoencoder layer
4. Shape-checked dense kernels (matmul, matvec, transpose, axpy)

All arrays are float64. Matrices are row-major numpy arrays; vectors are
1-D numpy arrays.
"""

from enum import Enum
from typing import Union

import numpy as np

from src.utils.errors import DimensionError

# Recorded in every serialized model so runs can be replayed
RNG_ALGORITHM = "PCG64"

SeededRng = np.random.Generator
Matrix = np.ndarray
Vector = np.ndarray

# exp() overflows float64 beyond ~709
_EXP_LIMIT = 700.0


class ActivationKind(Enum):
    """Elementwise nonlinearities used by the encoder and decoder"""
    SIGMOID = "sigmoid"
    TANH = "tanh"


def activate(kind: ActivationKind, z: np.ndarray) -> np.ndarray:
    """
    Apply the activation elementwise

    sigmoid(z) = 1 / (1 + e^(-z)),  tanh(z)
    """
    z = np.asarray(z, dtype=np.float64)
    if kind is ActivationKind.SIGMOID:
        return 1.0 / (1.0 + np.exp(-np.clip(z, -_EXP_LIMIT, _EXP_LIMIT)))
    if kind is ActivationKind.TANH:
        return np.tanh(z)
    raise ValueError(f"Unknown activation: {kind}")


def activate_prime_from_output(kind: ActivationKind, h: np.ndarray) -> np.ndarray:
    """
    Derivative of the activation expressed through its output h

    sigmoid: h(1 - h)      tanh: (1 + h)(1 - h)
    """
    h = np.asarray(h, dtype=np.float64)
    if kind is ActivationKind.SIGMOID:
        return h * (1.0 - h)
    if kind is ActivationKind.TANH:
        return (1.0 + h) * (1.0 - h)
    raise ValueError(f"Unknown activation: {kind}")


def activate_second_from_output(kind: ActivationKind, h: np.ndarray) -> np.ndarray:
    """d/dh of activate_prime_from_output (needed by the penalty gradient)"""
    h = np.asarray(h, dtype=np.float64)
    if kind is ActivationKind.SIGMOID:
        return 1.0 - 2.0 * h
    if kind is ActivationKind.TANH:
        return -2.0 * h
    raise ValueError(f"Unknown activation: {kind}")


def seeded_rng(seed: int) -> SeededRng:
    """A PCG64 stream; identical seeds give identical streams on every platform"""
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_rng(seed: int, *keys: int) -> SeededRng:
    """
    Independent child stream for (seed, key1, key2, ...)

    Used so that e.g. each stack layer or each SVM class pair gets its own
    stream without depending on how much randomness its siblings consumed.
    """
    sequence = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return np.random.Generator(np.random.PCG64(sequence))


def init_weights(d_h: int, d_v: int, rng: SeededRng) -> Matrix:
    """
    Draw a d_h × d_v weight matrix uniformly from the open interval
    (-√6/√(d_v+d_h), +√6/√(d_v+d_h))
    """
    if d_h < 1 or d_v < 1:
        raise DimensionError(f"Weight matrix needs positive dimensions, got {d_h}×{d_v}",
                             d_h=int(d_h), d_v=int(d_v))
    bound = np.sqrt(6.0) / np.sqrt(d_v + d_h)
    low = np.nextafter(-bound, 0.0)
    high = np.nextafter(bound, 0.0)
    weights = rng.uniform(low, bound, size=(d_h, d_v))
    # uniform() is half-open; rounding can still land on the upper edge
    return np.minimum(weights, high)


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.float64)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"Cannot multiply {a.shape} by {b.shape}",
                             left=list(a.shape), right=list(b.shape))
    return a @ b


def matvec(a: Matrix, v: Vector) -> Vector:
    a = np.asarray(a, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if a.ndim != 2 or v.ndim != 1 or a.shape[1] != v.shape[0]:
        raise DimensionError(f"Cannot multiply {a.shape} by vector {v.shape}",
                             matrix=list(a.shape), vector=list(v.shape))
    return a @ v


def transpose(a: Matrix) -> Matrix:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"Transpose needs a matrix, got shape {a.shape}", shape=list(a.shape))
    return np.ascontiguousarray(a.T)


def axpy(alpha: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """alpha·x + y"""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"axpy shape mismatch {x.shape} vs {y.shape}",
                             x=list(x.shape), y=list(y.shape))
    return alpha * x + y


def check_dim(v: np.ndarray, expected: int, what: str) -> None:
    """Raise DimensionError unless the last axis of v has length `expected`"""
    if v.ndim not in (1, 2) or v.shape[-1] != expected:
        raise DimensionError(f"{what}: expected dimension {expected}, got shape {v.shape}",
                             expected=int(expected), found=list(v.shape))


def all_finite(*arrays: Union[np.ndarray, float]) -> bool:
    return all(bool(np.all(np.isfinite(a))) for a in arrays)
