"""
Main Training Loop - Minibatch Gradient Descent for One Auto-Encoder
====================================================================

This module contains the training loop that turns a Variant and a data
matrix into trained AutoEncoderParams:
1. Start from uniform weights and zero biases
2. Each epoch: shuffle, split into minibatches, corrupt, step down the gradient
3. Record the per-epoch mean loss
4. Stop with a TrainingError the moment the loss stops being finite
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.data.corruption import corrupt_batch
from src.models.autoencoder import (
    AutoEncoderParams,
    LossKind,
    Variant,
    batch_objective,
    gradients,
    init_params,
)
from src.utils.errors import ConfigError, DimensionError, TrainingError
from src.utils.numerics import ActivationKind, all_finite, derive_rng

# Independent random streams per training run
_STREAM_INIT, _STREAM_SHUFFLE, _STREAM_NOISE, _STREAM_EVAL = range(4)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings for one autoencoder layer (plain minibatch SGD)"""
    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int = 100
    loss_kind: LossKind = LossKind.SQUARED
    activation: ActivationKind = ActivationKind.SIGMOID
    seed: int = 0
    resample_noise: bool = True

    def __post_init__(self):
        if not isinstance(self.loss_kind, LossKind):
            object.__setattr__(self, "loss_kind", LossKind(self.loss_kind))
        if not isinstance(self.activation, ActivationKind):
            object.__setattr__(self, "activation", ActivationKind(self.activation))
        if self.learning_rate < 0:
            raise ConfigError(f"Learning rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"Epoch count must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"Batch size must be >= 1, got {self.batch_size}")
        if self.seed < 0:
            raise ConfigError(f"Seed must be unsigned, got {self.seed}")

    def to_dict(self) -> Dict[str, Any]:
        doc = asdict(self)
        doc["loss_kind"] = self.loss_kind.value
        doc["activation"] = self.activation.value
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"Unknown training fields: {sorted(unknown)}", fields=sorted(unknown))
        try:
            return cls(**doc)
        except ValueError as e:
            raise ConfigError(f"Invalid training config: {e}")


@dataclass
class LossReport:
    """Final objective decomposition plus the per-epoch trace of mean losses"""
    total: float
    reconstruction: float
    penalty: float
    lam: float = 0.0
    trace: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class AutoEncoderTrainer:
    """
    Training orchestrator for one autoencoder layer

    Coordinates initialization, epochs, corruption and parameter updates.
    """

    def __init__(self,
                 variant: Variant,
                 config: TrainConfig,
                 hidden_dim: int,
                 debug: bool = False):
        """
        Initialize the trainer

        Args:
            variant: Objective to minimize (AE, DAE, CAE or CDAE)
            config: Optimizer settings and seed
            hidden_dim: Number of hidden units d_h
            debug: Print per-epoch progress
        """
        self.variant = variant
        self.config = config
        self.hidden_dim = hidden_dim
        self.debug = debug

        self.init_rng = derive_rng(config.seed, _STREAM_INIT)
        self.shuffle_rng = derive_rng(config.seed, _STREAM_SHUFFLE)
        self.noise_rng = derive_rng(config.seed, _STREAM_NOISE)

        # Training statistics
        self.epoch_losses: List[float] = []

    def train(self, data: np.ndarray,
              params: Optional[AutoEncoderParams] = None) -> Tuple[AutoEncoderParams, LossReport]:
        """
        Run the main training loop

        Args:
            data: n × d_v matrix of training samples
            params: Starting point; fresh initialization when omitted

        Returns:
            Trained parameters and the loss report
        """
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] == 0:
            raise DimensionError("Training data must be a non-empty n × d matrix",
                                 shape=list(data.shape))
        n, d_v = data.shape
        if self.config.batch_size > n:
            raise ConfigError(f"Batch size {self.config.batch_size} exceeds dataset size {n}",
                              batch_size=self.config.batch_size, samples=n)

        if params is None:
            params = init_params(d_v, self.hidden_dim, self.config.activation, self.init_rng)
        else:
            params = params.copy()

        self.epoch_losses = []
        frozen_noise = None
        if not self.config.resample_noise and not self.variant.corruption.is_identity:
            frozen_noise = corrupt_batch(self.variant.corruption, data, self.noise_rng)

        if self.debug:
            print(f"🚀 Training {self.variant.tag.value} {d_v}→{self.hidden_dim} "
                  f"for {self.config.epochs} epochs on {n} samples...")

        for epoch in range(self.config.epochs):
            epoch_loss = self._run_epoch(epoch, params, data, frozen_noise)
            self.epoch_losses.append(epoch_loss)

            if self.debug and (epoch % 10 == 0 or epoch == self.config.epochs - 1):
                print(f"   Epoch {epoch + 1}: loss={epoch_loss:.6f}")

        return params, self._get_training_stats(params, data, frozen_noise)

    def _run_epoch(self, epoch: int, params: AutoEncoderParams, data: np.ndarray,
                   frozen_noise: Optional[np.ndarray]) -> float:
        """
        Run one pass over the shuffled data, updating params in place

        Returns:
            Sample-weighted mean of the minibatch losses
        """
        n = data.shape[0]
        order = self.shuffle_rng.permutation(n)
        lr = self.config.learning_rate
        weighted_loss = 0.0

        for start in range(0, n, self.config.batch_size):
            idx = order[start:start + self.config.batch_size]
            batch = data[idx]
            X_tilde = frozen_noise[idx] if frozen_noise is not None else None
            grads = gradients(self.variant, params, batch, self.noise_rng,
                              self.config.loss_kind, X_tilde=X_tilde)
            if not all_finite(grads.loss, grads.W, grads.b, grads.c):
                raise TrainingError(f"Loss became non-finite in epoch {epoch}", epoch=epoch)

            params.W -= lr * grads.W
            params.b -= lr * grads.b
            params.c -= lr * grads.c
            weighted_loss += grads.loss * len(idx)

        if not all_finite(params.W, params.b, params.c):
            raise TrainingError(f"Parameters became non-finite in epoch {epoch}", epoch=epoch)
        return weighted_loss / n

    def _get_training_stats(self, params: AutoEncoderParams, data: np.ndarray,
                            frozen_noise: Optional[np.ndarray]) -> LossReport:
        """Evaluate the objective of the trained params over the whole dataset"""
        if frozen_noise is not None:
            X_tilde = frozen_noise
        elif self.variant.corruption.is_identity:
            X_tilde = data
        else:
            X_tilde = corrupt_batch(self.variant.corruption, data,
                                    derive_rng(self.config.seed, _STREAM_EVAL))
        _, reconstruction, penalty = batch_objective(
            self.variant, params, data, self.config.loss_kind, X_tilde)
        lam = self.variant.penalty_weight
        return LossReport(
            total=reconstruction + lam * penalty,
            reconstruction=reconstruction,
            penalty=penalty,
            lam=lam,
            trace=list(self.epoch_losses),
        )


def train(variant: Variant, data: np.ndarray, cfg: TrainConfig, hidden_dim: int,
          debug: bool = False) -> Tuple[AutoEncoderParams, LossReport]:
    """Train one autoencoder layer from a fresh initialization"""
    return AutoEncoderTrainer(variant, cfg, hidden_dim, debug=debug).train(data)
