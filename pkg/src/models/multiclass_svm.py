"""
One-vs-One Multiclass SVM
=========================

One binary SVM per unordered class pair (a, b), a < b, trained on the
samples of those two classes with a as +1. Prediction is a majority vote;
ties go to the class with the largest summed |decision value| over the
contests it won, then to the lowest class label.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.models.svm import KernelKind, KernelSpec, SvmModel, decision_function, smo_train
from src.utils.errors import ConfigError, DataError
from src.utils.io import PathLike, atomic_write_json, read_json
from src.utils.numerics import derive_rng

MULTICLASS_FORMAT = "cdae-multiclass-svm"
MULTICLASS_VERSION = 1

GRID_C = (1.0, 10.0, 100.0)
GRID_SIGMA_FACTORS = (0.5, 1.0, 2.0)


def default_sigma(feature_dim: int) -> float:
    return math.sqrt(feature_dim / 2.0)


@dataclass(frozen=True)
class SvmSettings:
    """
    Classifier protocol shared by every variant

    A kernel sigma of None means √(feature_dim / 2), resolved at training time.
    """
    C: float = 10.0
    kernel: KernelKind = KernelKind.RBF
    sigma: Optional[float] = None
    p: int = 3
    kappa: float = 1.0
    delta: float = 0.0
    tol: float = 1e-3
    max_passes: int = 50
    grid_search: bool = False

    def __post_init__(self):
        if not isinstance(self.kernel, KernelKind):
            object.__setattr__(self, "kernel", KernelKind(self.kernel))
        if not self.C > 0:
            raise ConfigError(f"C must be > 0, got {self.C}")
        if self.tol <= 0:
            raise ConfigError(f"SVM tolerance must be > 0, got {self.tol}")

    def kernel_spec(self, feature_dim: int) -> KernelSpec:
        sigma = self.sigma if self.sigma is not None else default_sigma(feature_dim)
        return KernelSpec(self.kernel, p=self.p, sigma=sigma, kappa=self.kappa, delta=self.delta)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "C": self.C,
            "kernel": self.kernel.value,
            "sigma": self.sigma,
            "p": self.p,
            "kappa": self.kappa,
            "delta": self.delta,
            "tol": self.tol,
            "max_passes": self.max_passes,
            "grid_search": self.grid_search,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "SvmSettings":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown SVM fields: {sorted(unknown)}", fields=sorted(unknown))
        try:
            return cls(**doc)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid SVM settings: {e}")


@dataclass
class MulticlassSvm:
    """One SvmModel per unordered class pair"""
    classes: List[int]
    pairwise_models: Dict[Tuple[int, int], SvmModel] = field(default_factory=dict)

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": MULTICLASS_FORMAT,
            "version": MULTICLASS_VERSION,
            "classes": list(self.classes),
            "pairs": [{"a": a, "b": b, "model": m.to_dict()}
                      for (a, b), m in sorted(self.pairwise_models.items())],
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "MulticlassSvm":
        if doc.get("format") != MULTICLASS_FORMAT or doc.get("version") != MULTICLASS_VERSION:
            raise ConfigError("Not a multiclass SVM document")
        models = {(int(p["a"]), int(p["b"])): SvmModel.from_dict(p["model"]) for p in doc["pairs"]}
        return cls([int(c) for c in doc["classes"]], models)

    def save(self, path: PathLike) -> None:
        atomic_write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: PathLike) -> "MulticlassSvm":
        return cls.from_dict(read_json(path))


def multiclass_train(features: np.ndarray, labels: Sequence[int], C: float, kernel: KernelSpec,
                     tol: float = 1e-3, max_passes: int = 50, seed: int = 0,
                     threads: Optional[int] = None, debug: bool = False) -> MulticlassSvm:
    """
    Train all pairwise models, in parallel when threads > 1

    Each pair draws from its own stream derived from (seed, a, b), so the
    result does not depend on the thread count.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DataError(f"Features {X.shape} and labels {y.shape} do not match")
    classes = sorted(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise DataError("Multiclass training needs at least 2 classes", classes=classes)

    pairs = list(combinations(classes, 2))

    def train_pair(pair: Tuple[int, int]) -> SvmModel:
        a, b = pair
        mask = (y == a) | (y == b)
        binary = np.where(y[mask] == a, 1.0, -1.0)
        return smo_train(X[mask], binary, C, kernel, tol=tol, max_passes=max_passes,
                         rng=derive_rng(seed, a, b))

    if debug:
        print(f"🧮 Training {len(pairs)} pairwise SVMs ({kernel.kind.value}, C={C})...")

    workers = max(1, int(threads or 1))
    if workers == 1:
        models = [train_pair(pair) for pair in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(train_pair, pairs))

    return MulticlassSvm(classes, dict(zip(pairs, models)))


def multiclass_decide(model: MulticlassSvm, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Votes and summed winning margins per class, plus the predicted labels"""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    index = {c: k for k, c in enumerate(model.classes)}
    votes = np.zeros((n, model.class_count), dtype=np.int64)
    margins = np.zeros((n, model.class_count))
    for (a, b), pair_model in sorted(model.pairwise_models.items()):
        values = decision_function(pair_model, X)
        a_wins = values >= 0.0
        winner = np.where(a_wins, index[a], index[b])
        rows = np.arange(n)
        votes[rows, winner] += 1
        margins[rows, winner] += np.abs(values)

    top = votes == votes.max(axis=1, keepdims=True)
    score = np.where(top, margins, -np.inf)
    # argmax takes the first maximum, i.e. the lowest class label
    best = np.argmax(score, axis=1)
    predictions = np.asarray(model.classes, dtype=np.int64)[best]
    return votes, margins, predictions


def multiclass_predict(model: MulticlassSvm, x: np.ndarray):
    """Predicted class for one vector (int) or for each row of a matrix (array)"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return int(multiclass_decide(model, x[np.newaxis, :])[2][0])
    return multiclass_decide(model, x)[2]


@dataclass
class GridResult:
    C: float
    sigma: float
    accuracy: float


def grid_search(features: np.ndarray, labels: Sequence[int], settings: SvmSettings,
                seed: int = 0, threads: Optional[int] = None,
                debug: bool = False) -> Tuple[SvmSettings, List[GridResult]]:
    """
    Coarse search over C ∈ {1, 10, 100} and σ ∈ {0.5, 1, 2} × default

    Holds out a seeded fifth of the training split for validation; ties go
    to the earlier grid point.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    order = derive_rng(seed, 0x5EA7C4).permutation(len(y))
    n_val = max(1, len(y) // 5)
    val, fit = order[:n_val], order[n_val:]
    base_sigma = settings.sigma if settings.sigma is not None else default_sigma(X.shape[1])

    results: List[GridResult] = []
    for C in GRID_C:
        for factor in GRID_SIGMA_FACTORS:
            sigma = base_sigma * factor
            model = multiclass_train(X[fit], y[fit], C, KernelSpec.rbf(sigma), tol=settings.tol,
                                     max_passes=settings.max_passes, seed=seed, threads=threads)
            accuracy = float(np.mean(multiclass_predict(model, X[val]) == y[val]))
            results.append(GridResult(C, sigma, accuracy))
            if debug:
                print(f"   🔎 C={C:g} sigma={sigma:.4g}: validation accuracy {accuracy:.4f}")

    best = max(results, key=lambda r: r.accuracy)
    return replace(settings, C=best.C, sigma=best.sigma, kernel=KernelKind.RBF), results
