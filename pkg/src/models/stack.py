"""
Stacked Auto-Encoder - Greedy Layer-Wise Pretraining
====================================================

Builds the deep encoder one layer at a time:
1. Train layer 1 on the (optionally rescaled) raw inputs
2. Encode the CLEAN inputs with it; those encodings are layer 2's data
3. Repeat until the last (middle) layer
4. extract_features runs the clean encoder composition - no corruption

The decoder half of the symmetric architecture (…-200-784) is implied by
the tied weights and never stored.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from src.data.corruption import CorruptionKind, CorruptionSpec
from src.models.autoencoder import AutoEncoderParams, Variant, encode
from src.training.trainer import AutoEncoderTrainer, LossReport, TrainConfig
from src.utils.errors import ConfigError, DimensionError, TrainingError
from src.utils.io import PathLike, atomic_write_json, read_json
from src.utils.numerics import RNG_ALGORITHM, check_dim, derive_rng

STACK_FORMAT = "cdae-stack"
STACK_VERSION = 1
MNIST_PIXELS = 784


class InputRange(Enum):
    """How first-layer inputs in [0, 1] are presented to the network"""
    UNIT = "unit"            # as-is
    SYMMETRIC = "symmetric"  # rescaled to [-1, 1]


class HiddenCorruption(Enum):
    """How a pixel-level masking rule carries over to hidden layers"""
    STRIDE = "stride"        # same start/stride over the hidden dimension
    FRACTION = "fraction"    # random mask of the same fraction (10/784)


def scale_inputs(X: np.ndarray, input_range: InputRange) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if input_range is InputRange.SYMMETRIC:
        return 2.0 * X - 1.0
    return X


@dataclass(frozen=True)
class StackSpec:
    """Architecture (encoder half) plus how every layer is trained"""
    layer_dims: Sequence[int]
    variant: Variant
    train: TrainConfig = field(default_factory=TrainConfig)
    input_range: InputRange = InputRange.UNIT
    hidden_corruption: HiddenCorruption = HiddenCorruption.STRIDE
    layer_overrides: Dict[int, Variant] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        if not isinstance(self.input_range, InputRange):
            object.__setattr__(self, "input_range", InputRange(self.input_range))
        if not isinstance(self.hidden_corruption, HiddenCorruption):
            object.__setattr__(self, "hidden_corruption", HiddenCorruption(self.hidden_corruption))
        if len(self.layer_dims) < 2:
            raise ConfigError("A stack needs at least an input and one hidden dimension",
                              layer_dims=list(self.layer_dims))
        if any(d < 1 for d in self.layer_dims):
            raise ConfigError(f"Layer dimensions must be positive: {list(self.layer_dims)}",
                              layer_dims=list(self.layer_dims))
        for k in self.layer_overrides:
            if not 0 <= k < self.n_layers:
                raise ConfigError(f"Override for layer {k} outside a {self.n_layers}-layer stack")

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    def variant_for_layer(self, k: int) -> Variant:
        """
        Variant used to train layer k (0-based)

        Overrides win; otherwise the shared variant, with its corruption
        adapted to the layer's input dimension for hidden layers.
        """
        if k in self.layer_overrides:
            return self.layer_overrides[k]
        variant = self.variant
        corruption = variant.corruption
        if (k > 0 and corruption.kind is CorruptionKind.MASK_INDICES
                and self.hidden_corruption is HiddenCorruption.FRACTION):
            fraction = corruption.masked_count(MNIST_PIXELS) / MNIST_PIXELS
            return variant.with_corruption(CorruptionSpec.mask_fraction(fraction))
        return variant

    def train_config_for_layer(self, k: int) -> TrainConfig:
        """Layer 0 trains with the configured seed; deeper layers get derived seeds"""
        if k == 0:
            return self.train
        return replace(self.train, seed=int(derive_rng(self.train.seed, k).integers(2 ** 63)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "layer_dims": list(self.layer_dims),
            "variant": self.variant.to_dict(),
            "train": self.train.to_dict(),
            "input_range": self.input_range.value,
            "hidden_corruption": self.hidden_corruption.value,
            "layer_overrides": {str(k): v.to_dict() for k, v in sorted(self.layer_overrides.items())},
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "StackSpec":
        try:
            return cls(
                layer_dims=doc["layer_dims"],
                variant=Variant.from_dict(doc["variant"]),
                train=TrainConfig.from_dict(doc.get("train", {})),
                input_range=InputRange(doc.get("input_range", "unit")),
                hidden_corruption=HiddenCorruption(doc.get("hidden_corruption", "stride")),
                layer_overrides={int(k): Variant.from_dict(v)
                                 for k, v in doc.get("layer_overrides", {}).items()},
            )
        except KeyError as e:
            raise ConfigError(f"Stack spec is missing {e}")
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid stack spec: {e}")


@dataclass
class StackedModel:
    """Trained layers with chained dimensions, outermost first"""
    layers: List[AutoEncoderParams]
    input_range: InputRange = InputRange.UNIT
    spec: Optional[StackSpec] = None
    reports: List[LossReport] = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            raise DimensionError("A stacked model needs at least one layer")
        for k in range(1, len(self.layers)):
            if self.layers[k].d_v != self.layers[k - 1].d_h:
                raise DimensionError(
                    f"Layer {k} expects {self.layers[k].d_v} inputs but layer {k - 1} "
                    f"produces {self.layers[k - 1].d_h}")

    @property
    def layer_dims(self) -> List[int]:
        return [self.layers[0].d_v] + [layer.d_h for layer in self.layers]

    @property
    def feature_dim(self) -> int:
        return self.layers[-1].d_h

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": STACK_FORMAT,
            "version": STACK_VERSION,
            "rng_algorithm": RNG_ALGORITHM,
            "layer_dims": self.layer_dims,
            "input_range": self.input_range.value,
            "spec": None if self.spec is None else self.spec.to_dict(),
            "loss_reports": [r.to_dict() for r in self.reports],
            "layers": [layer.to_dict() for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "StackedModel":
        if doc.get("format") != STACK_FORMAT or doc.get("version") != STACK_VERSION:
            raise ConfigError("Not a stacked model document",
                              format=doc.get("format"), version=doc.get("version"))
        spec = StackSpec.from_dict(doc["spec"]) if doc.get("spec") else None
        return cls(
            layers=[AutoEncoderParams.from_dict(layer) for layer in doc["layers"]],
            input_range=InputRange(doc.get("input_range", "unit")),
            spec=spec,
            reports=[LossReport(**r) for r in doc.get("loss_reports", [])],
        )

    def save(self, path: PathLike) -> None:
        atomic_write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: PathLike) -> "StackedModel":
        return cls.from_dict(read_json(path))


LayerCallback = Callable[[int, AutoEncoderParams, LossReport], None]


def pretrain(spec: StackSpec, data: np.ndarray,
             resume_layers: Optional[List[AutoEncoderParams]] = None,
             resume_reports: Optional[List[LossReport]] = None,
             on_layer_trained: Optional[LayerCallback] = None,
             debug: bool = False) -> StackedModel:
    """
    Greedy layer-wise pretraining

    Args:
        spec: Architecture, variant and training settings
        data: n × layer_dims[0] matrix of samples in [0, 1]
        resume_layers: Already-trained leading layers to reuse as-is
        resume_reports: Their loss reports
        on_layer_trained: Called after each newly trained layer (checkpointing)
        debug: Print progress

    Returns:
        The trained StackedModel
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise DimensionError("Pretraining data must be an n × d matrix", shape=list(data.shape))
    check_dim(data, spec.layer_dims[0], "pretraining data")

    layers: List[AutoEncoderParams] = list(resume_layers or [])
    reports: List[LossReport] = list(resume_reports or [])
    if len(layers) > spec.n_layers:
        raise ConfigError(f"{len(layers)} resumed layers for a {spec.n_layers}-layer stack")

    inputs = scale_inputs(data, spec.input_range)
    for k, layer in enumerate(layers):
        if layer.d_v != spec.layer_dims[k] or layer.d_h != spec.layer_dims[k + 1]:
            raise DimensionError(f"Resumed layer {k} does not match the architecture")
        inputs = encode(layer, inputs)

    for k in range(len(layers), spec.n_layers):
        if debug:
            print(f"\n🧱 Layer {k + 1}/{spec.n_layers}: "
                  f"{spec.layer_dims[k]}→{spec.layer_dims[k + 1]}")
        trainer = AutoEncoderTrainer(spec.variant_for_layer(k), spec.train_config_for_layer(k),
                                     spec.layer_dims[k + 1], debug=debug)
        try:
            params, report = trainer.train(inputs)
        except TrainingError as e:
            raise TrainingError(f"Layer {k}: {e.message}", epoch=e.epoch, layer=k)
        layers.append(params)
        reports.append(report)
        if on_layer_trained is not None:
            on_layer_trained(k, params, report)
        # clean encodings of clean data feed the next layer
        inputs = encode(params, inputs)

    return StackedModel(layers, input_range=spec.input_range, spec=spec, reports=reports)


def extract_features(model: StackedModel, x: np.ndarray) -> np.ndarray:
    """Clean encoder composition through every layer; x is one sample or an n × d batch"""
    x = np.asarray(x, dtype=np.float64)
    check_dim(x, model.layers[0].d_v, "feature extraction input")
    out = scale_inputs(x, model.input_range)
    for layer in model.layers:
        out = encode(layer, out)
    return out
