"""
Support Vector Machine - Kernels and SMO Training
=================================================

A binary kernel SVM trained by sequential minimal optimization:
1. Scan for the first sample that violates the KKT conditions
2. Pair it with a random second sample (falling back to the sample with the
   largest error gap, then to any sample that makes progress)
3. Solve the two-variable subproblem analytically and update the bias
4. Stop once a full sweep finds no violator at the given tolerance

Kernels:
    polynomial  (x·y + 1)^p
    rbf         exp(-‖x - y‖² / 2σ²)
    tanh        tanh(κ x·y - δ)
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from src.utils.errors import ConfigError, ConvergenceError, DataError, DimensionError
from src.utils.numerics import SeededRng, seeded_rng

# Dense Gram matrices are cached up to this many samples
GRAM_CACHE_LIMIT = 4000
# Full sweeps allowed in total, as a backstop against cycling
MAX_SWEEPS = 100_000

_STEP_EPS = 1e-12
SVM_FORMAT = "cdae-svm"
SVM_VERSION = 1


class KernelKind(Enum):
    POLYNOMIAL = "polynomial"
    RBF = "rbf"
    TANH = "tanh_kernel"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice and its parameters (only those the kind needs are meaningful)"""
    kind: KernelKind = KernelKind.RBF
    p: int = 3
    sigma: float = 1.0
    kappa: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, KernelKind):
            object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.RBF and not self.sigma > 0:
            raise ConfigError(f"RBF kernel needs sigma > 0, got {self.sigma}", sigma=self.sigma)
        if self.kind is KernelKind.POLYNOMIAL and self.p < 1:
            raise ConfigError(f"Polynomial kernel needs p >= 1, got {self.p}", p=self.p)

    @classmethod
    def rbf(cls, sigma: float) -> "KernelSpec":
        return cls(KernelKind.RBF, sigma=sigma)

    @classmethod
    def polynomial(cls, p: int) -> "KernelSpec":
        return cls(KernelKind.POLYNOMIAL, p=p)

    @classmethod
    def tanh(cls, kappa: float, delta: float) -> "KernelSpec":
        return cls(KernelKind.TANH, kappa=kappa, delta=delta)

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is KernelKind.POLYNOMIAL:
            doc["p"] = self.p
        elif self.kind is KernelKind.RBF:
            doc["sigma"] = self.sigma
        else:
            doc["kappa"] = self.kappa
            doc["delta"] = self.delta
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "KernelSpec":
        unknown = set(doc) - {"kind", "p", "sigma", "kappa", "delta"}
        if unknown:
            raise ConfigError(f"Unknown kernel fields: {sorted(unknown)}", fields=sorted(unknown))
        try:
            kind = KernelKind(doc.get("kind", "rbf"))
        except ValueError:
            raise ConfigError(f"Unknown kernel kind: {doc.get('kind')}")
        return cls(kind, p=int(doc.get("p", 3)), sigma=float(doc.get("sigma", 1.0)),
                   kappa=float(doc.get("kappa", 1.0)), delta=float(doc.get("delta", 0.0)))


def kernel_eval(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    """K(x, y) for two vectors"""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"Kernel needs two vectors of equal dimension, got {x.shape} and {y.shape}")
    if spec.kind is KernelKind.RBF:
        diff = x - y
        return float(np.exp(-np.dot(diff, diff) / (2.0 * spec.sigma ** 2)))
    dot = float(np.dot(x, y))
    if spec.kind is KernelKind.POLYNOMIAL:
        return (dot + 1.0) ** spec.p
    return float(np.tanh(spec.kappa * dot - spec.delta))


def kernel_matrix(spec: KernelSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """K[i, j] = K(X[i], Y[j])"""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise DimensionError(f"Kernel matrix needs n × d and m × d inputs, got {X.shape} and {Y.shape}")
    dots = X @ Y.T
    if spec.kind is KernelKind.RBF:
        sq = np.sum(X ** 2, axis=1)[:, np.newaxis] + np.sum(Y ** 2, axis=1)[np.newaxis, :] - 2.0 * dots
        return np.exp(-np.maximum(sq, 0.0) / (2.0 * spec.sigma ** 2))
    if spec.kind is KernelKind.POLYNOMIAL:
        return (dots + 1.0) ** spec.p
    return np.tanh(spec.kappa * dots - spec.delta)


def gram_matrix(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    """Symmetric Gram matrix of X with an exact diagonal"""
    K = kernel_matrix(spec, X, X)
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, kernel_diagonal(spec, X))
    return K


def kernel_diagonal(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if spec.kind is KernelKind.RBF:
        return np.ones(X.shape[0])
    norms = np.sum(X ** 2, axis=1)
    if spec.kind is KernelKind.POLYNOMIAL:
        return (norms + 1.0) ** spec.p
    return np.tanh(spec.kappa * norms - spec.delta)


@dataclass
class SvmModel:
    """
    A trained binary SVM

    alphas hold dual coefficient × label for each support vector;
    support_indices point back into the training set.
    """
    support_vectors: np.ndarray
    alphas: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float
    support_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sweeps: int = 0
    dual_trace: List[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": SVM_FORMAT,
            "version": SVM_VERSION,
            "kernel": self.kernel.to_dict(),
            "C": self.C,
            "bias": self.bias,
            "dim": int(self.support_vectors.shape[1]),
            "support_vectors": self.support_vectors.ravel().tolist(),
            "alphas": self.alphas.tolist(),
            "support_indices": [int(i) for i in self.support_indices],
            "sweeps": self.sweeps,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "SvmModel":
        if doc.get("format") != SVM_FORMAT or doc.get("version") != SVM_VERSION:
            raise ConfigError("Not an SVM model document")
        alphas = np.asarray(doc["alphas"], dtype=np.float64)
        vectors = np.asarray(doc["support_vectors"], dtype=np.float64).reshape(len(alphas), int(doc["dim"]))
        return cls(vectors, alphas, float(doc["bias"]), KernelSpec.from_dict(doc["kernel"]),
                   float(doc["C"]), np.asarray(doc["support_indices"], dtype=np.int64),
                   int(doc.get("sweeps", 0)))


def decision_function(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Σ alpha_i K(sv_i, x) + bias for each row of X (or a single vector)"""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = X[np.newaxis, :] if single else X
    if X2.ndim != 2 or X2.shape[1] != model.dim:
        raise DimensionError(f"SVM expects {model.dim}-dimensional inputs, got shape {X.shape}",
                             expected=model.dim, found=list(X.shape))
    values = kernel_matrix(model.kernel, X2, model.support_vectors) @ model.alphas + model.bias
    return values[0] if single else values


def predict(model: SvmModel, x: np.ndarray):
    """
    Label in {+1, -1} plus the decision value; a value of exactly 0 resolves to +1

    Works on one vector (returns scalars) or a batch (returns arrays).
    """
    values = decision_function(model, x)
    labels = np.where(values >= 0.0, 1, -1)
    if np.ndim(values) == 0:
        return int(labels), float(values)
    return labels, values


class _KernelColumns:
    """Kernel columns of the training set: cached Gram matrix or computed on demand"""

    def __init__(self, spec: KernelSpec, X: np.ndarray, cache_limit: int):
        self.spec = spec
        self.X = X
        self.diag = kernel_diagonal(spec, X)
        self.gram = gram_matrix(spec, X) if X.shape[0] <= cache_limit else None

    def column(self, i: int) -> np.ndarray:
        if self.gram is not None:
            return self.gram[:, i]
        return kernel_matrix(self.spec, self.X, self.X[i:i + 1])[:, 0]

    def outputs(self, coef: np.ndarray) -> np.ndarray:
        """K @ coef"""
        if self.gram is not None:
            return self.gram @ coef
        active = np.nonzero(coef)[0]
        if active.size == 0:
            return np.zeros(self.X.shape[0])
        return kernel_matrix(self.spec, self.X, self.X[active]) @ coef[active]


def kkt_violations(labels: np.ndarray, alpha: np.ndarray, outputs: np.ndarray,
                   C: float, tol: float) -> np.ndarray:
    """Boolean mask of training points violating KKT at tolerance tol"""
    margin = labels * outputs - 1.0
    return ((margin < -tol) & (alpha < C)) | ((margin > tol) & (alpha > 0.0))


def audit_kkt(model: SvmModel, features: np.ndarray, labels: np.ndarray, tol: float) -> int:
    """Number of training points violating KKT conditions under `model`"""
    labels = np.asarray(labels, dtype=np.float64)
    alpha = np.zeros(len(labels))
    alpha[model.support_indices] = np.abs(model.alphas)
    outputs = decision_function(model, np.asarray(features, dtype=np.float64))
    count = int(np.sum(kkt_violations(labels, alpha, outputs, model.C, tol)))
    if abs(float(np.dot(alpha, labels))) > tol:
        count += 1
    return count


class SmoSolver:
    """
    Simplified SMO with Platt's fallback choices for the second multiplier

    Alternates full sweeps with sweeps over non-bound multipliers; declares
    convergence only after a full sweep that finds no violator.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray, C: float,
                 kernel: KernelSpec, tol: float, max_passes: int, rng: SeededRng,
                 cache_limit: int = GRAM_CACHE_LIMIT, debug: bool = False):
        self.X = features
        self.y = labels
        self.C = C
        self.tol = tol
        self.max_passes = max_passes
        self.rng = rng
        self.debug = debug
        self.n = features.shape[0]
        self.kernel = kernel
        self.columns = _KernelColumns(kernel, features, cache_limit)

        self.alpha = np.zeros(self.n)
        self.b = 0.0
        # f_i = Σ_j alpha_j y_j K_ij + b
        self.f = np.zeros(self.n)
        self.dual_trace: List[float] = []
        self.sweeps = 0

    def solve(self) -> SvmModel:
        stalled = 0
        examine_all = True
        while self.sweeps < MAX_SWEEPS:
            if examine_all:
                self.sweeps += 1
                self._refresh_outputs()
                candidates = range(self.n)
            else:
                candidates = np.nonzero((self.alpha > 0.0) & (self.alpha < self.C))[0]

            violators, changed = 0, 0
            for i in candidates:
                if self._violates(i):
                    violators += 1
                    changed += self._optimize_with(int(i))

            self.dual_trace.append(self._dual_objective())

            if examine_all:
                if violators == 0:
                    return self._build_model()
                stalled = stalled + 1 if changed == 0 else 0
                if stalled >= self.max_passes:
                    break
                examine_all = False
            elif changed == 0:
                examine_all = True

        remaining = int(np.sum(kkt_violations(self.y, self.alpha, self.f, self.C, self.tol)))
        raise ConvergenceError(
            f"SMO stopped after {self.sweeps} sweeps with {remaining} KKT violators",
            violations=remaining, sweeps=self.sweeps)

    def _refresh_outputs(self):
        # recompute from scratch so rounding drift cannot hide a violator
        self.f = self.columns.outputs(self.alpha * self.y) + self.b

    def _violates(self, i: int) -> bool:
        r = self.y[i] * self.f[i] - 1.0
        return (r < -self.tol and self.alpha[i] < self.C) or (r > self.tol and self.alpha[i] > 0.0)

    def _optimize_with(self, i: int) -> int:
        """Try second choices until one makes progress; 1 if alphas changed"""
        if self.n < 2:
            return 0
        j = int(self.rng.integers(self.n - 1))
        if j >= i:
            j += 1
        if self._take_step(i, j):
            return 1

        errors = self.f - self.y
        gaps = np.abs(errors[i] - errors)
        gaps[i] = -1.0
        j = int(np.argmax(gaps))
        if self._take_step(i, j):
            return 1

        offset = int(self.rng.integers(self.n))
        for k in range(self.n):
            j = (offset + k) % self.n
            if j != i and self._take_step(i, j):
                return 1
        return 0

    def _take_step(self, i: int, j: int) -> bool:
        y_i, y_j = self.y[i], self.y[j]
        a_i, a_j = self.alpha[i], self.alpha[j]
        E_i = self.f[i] - y_i
        E_j = self.f[j] - y_j
        C = self.C

        if y_i != y_j:
            L, H = max(0.0, a_j - a_i), min(C, C + a_j - a_i)
        else:
            L, H = max(0.0, a_i + a_j - C), min(C, a_i + a_j)
        if H - L < _STEP_EPS:
            return False

        col_i = self.columns.column(i)
        col_j = self.columns.column(j)
        K_ii, K_jj, K_ij = self.columns.diag[i], self.columns.diag[j], col_i[j]
        eta = K_ii + K_jj - 2.0 * K_ij
        if eta <= _STEP_EPS:
            return False

        new_a_j = min(H, max(L, a_j + y_j * (E_i - E_j) / eta))
        if abs(new_a_j - a_j) < _STEP_EPS * (new_a_j + a_j + _STEP_EPS):
            return False
        new_a_i = a_i + y_i * y_j * (a_j - new_a_j)
        new_a_i = self._snap(new_a_i)
        new_a_j = self._snap(new_a_j)

        d_i = y_i * (new_a_i - a_i)
        d_j = y_j * (new_a_j - a_j)
        b1 = self.b - E_i - d_i * K_ii - d_j * K_ij
        b2 = self.b - E_j - d_i * K_ij - d_j * K_jj
        if 0.0 < new_a_i < C:
            new_b = b1
        elif 0.0 < new_a_j < C:
            new_b = b2
        else:
            new_b = 0.5 * (b1 + b2)

        self.f += d_i * col_i + d_j * col_j + (new_b - self.b)
        self.alpha[i], self.alpha[j] = new_a_i, new_a_j
        self.b = new_b
        return True

    def _snap(self, a: float) -> float:
        if a < _STEP_EPS * self.C:
            return 0.0
        if a > self.C * (1.0 - _STEP_EPS):
            return self.C
        return a

    def _dual_objective(self) -> float:
        """Σα - ½ Σ_i α_i y_i (f_i - b)"""
        return float(np.sum(self.alpha) - 0.5 * np.dot(self.alpha * self.y, self.f - self.b))

    def _build_model(self) -> SvmModel:
        support = np.nonzero(self.alpha > 0.0)[0]
        if self.debug:
            print(f"   ✅ SMO converged: {len(support)} support vectors after {self.sweeps} sweeps")
        return SvmModel(
            support_vectors=self.X[support].copy(),
            alphas=(self.alpha * self.y)[support],
            bias=float(self.b),
            kernel=self.kernel,
            C=self.C,
            support_indices=support.astype(np.int64),
            sweeps=self.sweeps,
            dual_trace=list(self.dual_trace),
        )


def smo_train(features: np.ndarray, labels: np.ndarray, C: float, kernel: KernelSpec,
              tol: float = 1e-3, max_passes: int = 50, rng: Optional[SeededRng] = None,
              cache_limit: int = GRAM_CACHE_LIMIT, debug: bool = False) -> SvmModel:
    """
    Train a binary SVM by SMO

    Args:
        features: n × d training matrix
        labels: n labels in {+1, -1}, both present
        C: Box constraint (> 0)
        kernel: Kernel specification
        tol: KKT tolerance
        max_passes: Consecutive full sweeps without progress before giving up
        rng: Stream for the random second choice
        cache_limit: Largest n for which the Gram matrix is cached

    Raises:
        ConvergenceError: violators remain after max_passes stalled sweeps
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DimensionError(f"Features {X.shape} and labels {y.shape} do not match")
    if X.shape[0] < 2:
        raise DataError("SMO needs at least 2 samples", samples=int(X.shape[0]))
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("Binary SVM labels must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DataError("Binary SVM needs both labels present")
    if not C > 0:
        raise ConfigError(f"C must be > 0, got {C}", C=C)
    solver = SmoSolver(X, y, float(C), kernel, tol, max_passes, rng or seeded_rng(0),
                       cache_limit=cache_limit, debug=debug)
    return solver.solve()
