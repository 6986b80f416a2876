"""
Gradient Check - Analytic Gradients vs Central Finite Differences
=================================================================

For every parameter θ_k the numerical derivative is

    (L(θ + ε e_k) - L(θ - ε e_k)) / 2ε

with the corrupted batch frozen, so both evaluations see the same random
function. The relative error of a coordinate is measured against the
magnitude of its parameter block:

    |analytic_k - numeric_k| / max(|analytic_k|, |numeric_k|, ‖numeric_block‖_∞)

The block floor differs from a plain per-entry ratio
|a - n| / max(|a|, |n|): an entry far below the largest entry of its block
is judged by its absolute error relative to that block maximum, not by its
own size. Near-zero entries, where finite differences carry only rounding
noise, therefore cannot fail the check on their own. An error that is large
for the block still does.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from src.data.corruption import CorruptionSpec, corrupt_batch
from src.models.autoencoder import (
    AutoEncoderParams,
    Gradients,
    LossKind,
    Variant,
    batch_objective,
    gradients,
    init_params,
)
from src.utils.errors import ConfigError
from src.utils.numerics import ActivationKind, derive_rng

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-6

GradientFn = Callable[[Variant, AutoEncoderParams, np.ndarray, LossKind, np.ndarray], Gradients]


def _analytic(variant, params, X, loss_kind, X_tilde) -> Gradients:
    return gradients(variant, params, X, loss_kind=loss_kind, X_tilde=X_tilde)


def numerical_gradients(variant: Variant, params: AutoEncoderParams, X: np.ndarray,
                        loss_kind: LossKind, X_tilde: np.ndarray,
                        step: float = DEFAULT_STEP) -> Dict[str, np.ndarray]:
    """Central finite differences of batch_objective for W, b and c"""
    shifted = params.copy()
    result = {}
    for name in ("W", "b", "c"):
        values = getattr(shifted, name)
        grad = np.zeros_like(values)
        flat_values = values.reshape(-1)
        flat_grad = grad.reshape(-1)
        for k in range(flat_values.size):
            original = flat_values[k]
            flat_values[k] = original + step
            plus, _, _ = batch_objective(variant, shifted, X, loss_kind, X_tilde)
            flat_values[k] = original - step
            minus, _, _ = batch_objective(variant, shifted, X, loss_kind, X_tilde)
            flat_values[k] = original
            flat_grad[k] = (plus - minus) / (2.0 * step)
        result[name] = grad
    return result


@dataclass
class CheckResult:
    """Worst relative error of one gradient comparison and where it occurred"""
    max_relative_error: float
    block: str
    index: Tuple[int, ...]
    analytic: float
    numeric: float


def compare_gradients(analytic: Gradients, numeric: Dict[str, np.ndarray]) -> CheckResult:
    worst = CheckResult(0.0, "W", (0, 0), 0.0, 0.0)
    for name in ("W", "b", "c"):
        a = getattr(analytic, name)
        n = numeric[name]
        block_scale = max(float(np.max(np.abs(n))), 1e-12)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), block_scale)
        rel = np.abs(a - n) / denom
        k = int(np.argmax(rel))
        if rel.flat[k] > worst.max_relative_error:
            index = tuple(int(i) for i in np.unravel_index(k, rel.shape))
            worst = CheckResult(float(rel.flat[k]), name, index, float(a.flat[k]), float(n.flat[k]))
    return worst


def check_gradients(variant: Variant, params: AutoEncoderParams, X: np.ndarray,
                    loss_kind: LossKind, rng: np.random.Generator,
                    step: float = DEFAULT_STEP,
                    gradient_fn: Optional[GradientFn] = None) -> CheckResult:
    """Draw one corrupted batch, freeze it, and compare analytic vs numeric gradients"""
    X = np.asarray(X, dtype=np.float64)
    X_tilde = X if variant.corruption.is_identity else corrupt_batch(variant.corruption, X, rng)
    analytic = (gradient_fn or _analytic)(variant, params, X, loss_kind, X_tilde)
    numeric = numerical_gradients(variant, params, X, loss_kind, X_tilde, step)
    return compare_gradients(analytic, numeric)


def gradcheck_variants(lam: float = 0.1) -> Dict[str, Variant]:
    """The four objectives as exercised by the gradient check"""
    noise = CorruptionSpec.gaussian(0.1)
    return {
        "AE": Variant.ae(),
        "DAE": Variant.dae(noise),
        "CAE": Variant.cae(lam),
        "CDAE": Variant.cdae(noise, lam),
    }


@dataclass
class GradcheckCase:
    variant: str
    activation: str
    loss: str
    restart: int
    result: CheckResult


@dataclass
class GradcheckReport:
    """Outcome of the full variant × activation × loss matrix"""
    tolerance: float
    cases: List[GradcheckCase] = field(default_factory=list)

    @property
    def worst(self) -> Optional[GradcheckCase]:
        if not self.cases:
            return None
        return max(self.cases, key=lambda c: c.result.max_relative_error)

    @property
    def passed(self) -> bool:
        worst = self.worst
        return worst is None or worst.result.max_relative_error < self.tolerance

    def to_dict(self) -> Dict:
        worst = self.worst
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "cases": len(self.cases),
            "worst": None if worst is None else {
                "variant": worst.variant,
                "activation": worst.activation,
                "loss": worst.loss,
                "restart": worst.restart,
                "block": worst.result.block,
                "index": list(worst.result.index),
                "relative_error": worst.result.max_relative_error,
                "analytic": worst.result.analytic,
                "numeric": worst.result.numeric,
            },
        }


def run_gradcheck(d_v: int = 20, d_h: int = 7, variants: Optional[Iterable[str]] = None,
                  tolerance: float = DEFAULT_TOLERANCE, restarts: int = 25, batch: int = 4,
                  seed: int = 0, step: float = DEFAULT_STEP,
                  gradient_fn: Optional[GradientFn] = None,
                  debug: bool = False) -> GradcheckReport:
    """
    Run every variant × activation × loss combination with random restarts

    Inputs are uniform in (0, 1), the range of pixel data.
    """
    catalog = gradcheck_variants()
    names = [v.upper() for v in (variants or catalog.keys())]
    unknown = [n for n in names if n not in catalog]
    if unknown:
        raise ConfigError(f"Unknown variants: {unknown}", known=sorted(catalog))
    if restarts < 1:
        raise ConfigError(f"restarts must be >= 1, got {restarts}")
    report = GradcheckReport(tolerance=tolerance)
    combos = product(names, ActivationKind, LossKind)

    for case_id, (name, activation, loss_kind) in enumerate(combos):
        variant = catalog[name]
        for restart in range(restarts):
            rng = derive_rng(seed, case_id, restart)
            params = init_params(d_v, d_h, activation, rng)
            # non-zero biases exercise more of the activation range
            params.b = rng.uniform(-0.5, 0.5, d_h)
            params.c = rng.uniform(-0.5, 0.5, d_v)
            X = rng.uniform(0.0, 1.0, (batch, d_v))
            result = check_gradients(variant, params, X, loss_kind, rng, step, gradient_fn)
            report.cases.append(GradcheckCase(name, activation.value, loss_kind.value, restart, result))

        if debug:
            worst = max(c.result.max_relative_error for c in report.cases[-restarts:]) if restarts else 0.0
            mark = "✅" if worst < tolerance else "❌"
            print(f"   {mark} {name:<4} {activation.value:<7} {loss_kind.value:<13} worst={worst:.2e}")

    return report
