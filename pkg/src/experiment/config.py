"""
Experiment Configuration - One JSON Document Per Run
====================================================

An ExperimentConfig plus the IDX files determines every byte a run writes.
Only dataset paths, the output directory and the thread count may be
overridden from the environment.
"""

import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence

from src.data.corruption import CorruptionSpec
from src.data.mnist import PIXELS, Selection, SplitSpec
from src.models.autoencoder import Variant
from src.models.multiclass_svm import SvmSettings
from src.models.stack import HiddenCorruption, InputRange, StackSpec
from src.training.trainer import TrainConfig
from src.utils.errors import ConfigError
from src.utils.io import PathLike, atomic_write_json, read_json
from src.utils.numerics import ActivationKind

SCHEMA_VERSION = 1
VARIANT_NAMES = ("ae", "dae", "cae", "cdae")
SCALES = ("desk", "full")

ENV_TRAIN_IMAGES = "CDAE_TRAIN_IMAGES"
ENV_TRAIN_LABELS = "CDAE_TRAIN_LABELS"
ENV_OUT_DIR = "CDAE_OUT_DIR"
ENV_THREADS = "CDAE_THREADS"

DEFAULT_IMAGES = "data/train-images-idx3-ubyte.gz"
DEFAULT_LABELS = "data/train-labels-idx1-ubyte.gz"


def default_threads() -> int:
    return os.cpu_count() or 1


def standard_variants(lam: float = 0.1, stride: int = 80, start_index: int = 0) -> Dict[str, Variant]:
    """The four objectives compared in every table: masking noise, λ = 0.1"""
    mask = CorruptionSpec.mask_indices(stride=stride, start_index=start_index)
    return {
        "ae": Variant.ae(),
        "dae": Variant.dae(mask),
        "cae": Variant.cae(lam),
        "cdae": Variant.cdae(mask, lam),
    }


def architecture_tag(layer_dims: Sequence[int]) -> str:
    return "-".join(str(d) for d in layer_dims)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one run needs

    The top-level seed drives the split, every layer's training streams and
    the SVM pair streams; nested seeds are overwritten with it.
    """
    train_images: str = DEFAULT_IMAGES
    train_labels: str = DEFAULT_LABELS
    split: SplitSpec = field(default_factory=SplitSpec)
    architectures: Sequence[Sequence[int]] = ((784, 200, 100), (784, 200, 50))
    variants: Mapping[str, Variant] = field(default_factory=standard_variants)
    train: TrainConfig = field(default_factory=TrainConfig)
    input_range: InputRange = InputRange.UNIT
    hidden_corruption: HiddenCorruption = HiddenCorruption.STRIDE
    svm: SvmSettings = field(default_factory=SvmSettings)
    out_dir: str = "runs/default"
    seed: int = 0
    threads: int = field(default_factory=default_threads)
    scale: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "architectures",
                           tuple(tuple(int(d) for d in arch) for arch in self.architectures))
        object.__setattr__(self, "variants", {k.lower(): v for k, v in self.variants.items()})
        if not isinstance(self.input_range, InputRange):
            object.__setattr__(self, "input_range", InputRange(self.input_range))
        if not isinstance(self.hidden_corruption, HiddenCorruption):
            object.__setattr__(self, "hidden_corruption", HiddenCorruption(self.hidden_corruption))
        if self.seed < 0:
            raise ConfigError(f"Seed must be unsigned, got {self.seed}")
        if self.threads < 1:
            raise ConfigError(f"Thread count must be >= 1, got {self.threads}")
        if not self.architectures:
            raise ConfigError("At least one architecture is required")
        unknown = set(self.variants) - set(VARIANT_NAMES)
        if unknown:
            raise ConfigError(f"Unknown variants: {sorted(unknown)}", known=list(VARIANT_NAMES))
        # the top-level seed wins over nested ones
        object.__setattr__(self, "split", replace(self.split, seed=self.seed))
        object.__setattr__(self, "train", replace(self.train, seed=self.seed))

    @property
    def variant_names(self) -> List[str]:
        return [name for name in VARIANT_NAMES if name in self.variants]

    def variant(self, name: str) -> Variant:
        try:
            return self.variants[name.lower()]
        except KeyError:
            raise ConfigError(f"Variant {name!r} is not configured", configured=self.variant_names)

    def stack_spec(self, name: str, layer_dims: Sequence[int]) -> StackSpec:
        return StackSpec(layer_dims, self.variant(name), train=self.train,
                         input_range=self.input_range, hidden_corruption=self.hidden_corruption)

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        """Copy with the given fields replaced, ignoring None values"""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "scale": self.scale,
            "dataset": {"train_images": self.train_images, "train_labels": self.train_labels},
            "split": self.split.to_dict(),
            "architectures": [list(arch) for arch in self.architectures],
            "variants": {name: self.variants[name].to_dict() for name in self.variant_names},
            "train": self.train.to_dict(),
            "input_range": self.input_range.value,
            "hidden_corruption": self.hidden_corruption.value,
            "svm": self.svm.to_dict(),
            "out_dir": self.out_dir,
            "seed": self.seed,
            "threads": self.threads,
        }

    def replay_dict(self) -> Dict[str, Any]:
        """Config echo without the fields that cannot change any output"""
        doc = self.to_dict()
        doc.pop("threads")
        doc.pop("out_dir")
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "ExperimentConfig":
        known = {"schema_version", "scale", "dataset", "split", "architectures", "variants", "train",
                 "input_range", "hidden_corruption", "svm", "out_dir", "seed", "threads"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"Unknown config fields: {sorted(unknown)}", fields=sorted(unknown))
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"Unsupported schema_version {version!r}", expected=SCHEMA_VERSION,
                              found=version)
        base = cls()
        dataset = doc.get("dataset", {})
        try:
            return cls(
                train_images=dataset.get("train_images", base.train_images),
                train_labels=dataset.get("train_labels", base.train_labels),
                split=SplitSpec.from_dict(doc["split"]) if "split" in doc else base.split,
                architectures=doc.get("architectures", base.architectures),
                variants=({k: Variant.from_dict(v) for k, v in doc["variants"].items()}
                          if "variants" in doc else base.variants),
                train=TrainConfig.from_dict(doc["train"]) if "train" in doc else base.train,
                input_range=InputRange(doc.get("input_range", base.input_range.value)),
                hidden_corruption=HiddenCorruption(doc.get("hidden_corruption",
                                                           base.hidden_corruption.value)),
                svm=SvmSettings.from_dict(doc["svm"]) if "svm" in doc else base.svm,
                out_dir=doc.get("out_dir", base.out_dir),
                seed=int(doc.get("seed", 0)),
                threads=int(doc.get("threads", base.threads)),
                scale=doc.get("scale"),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid experiment config: {e}")

    def save(self, path: PathLike) -> None:
        atomic_write_json(path, self.to_dict())


def apply_env_overrides(config: ExperimentConfig,
                        environ: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Paths and thread count may come from CDAE_* environment variables"""
    env = os.environ if environ is None else environ
    threads = env.get(ENV_THREADS)
    if threads is not None:
        try:
            threads = int(threads)
        except ValueError:
            raise ConfigError(f"{ENV_THREADS} must be an integer, got {threads!r}")
    return config.with_overrides(
        train_images=env.get(ENV_TRAIN_IMAGES),
        train_labels=env.get(ENV_TRAIN_LABELS),
        out_dir=env.get(ENV_OUT_DIR),
        threads=threads,
    )


def load_config(path: PathLike, environ: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    try:
        doc = read_json(path)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}", path=str(path))
    except ValueError as e:
        raise ConfigError(f"Config file is not valid JSON: {e}", path=str(path))
    if not isinstance(doc, dict):
        raise ConfigError("Config document must be a JSON object", path=str(path))
    return apply_env_overrides(ExperimentConfig.from_dict(doc), environ)


def preset(scale: str, seed: int = 0) -> ExperimentConfig:
    """
    Reproduction presets

    desk: 200 + 200 samples per digit, one 784-200-50 stack
    full: 900 + 900 samples per digit, both 784-200-100 and 784-200-50

    Both use tanh units on [0, 1] pixels, squared loss, masking of every
    80th pixel and λ = 0.1. The learning rate is lowered to 0.01 because the
    loss is summed over 784 pixels. Minibatches of 20 instead of 100 give five
    times as many updates per epoch at that rate. The desk preset stops at
    30 epochs so that it finishes on a workstation.
    """
    if scale not in SCALES:
        raise ConfigError(f"Unknown scale {scale!r}", known=list(SCALES))
    train = TrainConfig(learning_rate=0.01, epochs=30 if scale == "desk" else 50, batch_size=20,
                        activation=ActivationKind.TANH, seed=seed)
    if scale == "desk":
        split = SplitSpec(per_class=200, seed=seed, selection=Selection.SEEDED_RANDOM)
        architectures = ((PIXELS, 200, 50),)
    else:
        split = SplitSpec(per_class=900, seed=seed, selection=Selection.SEEDED_RANDOM)
        architectures = ((PIXELS, 200, 100), (PIXELS, 200, 50))
    return ExperimentConfig(split=split, architectures=architectures, train=train,
                            out_dir=f"runs/{scale}", seed=seed, scale=scale)
