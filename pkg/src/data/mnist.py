"""
MNIST Dataset - IDX Parsing, Balanced Subset and Feature Files
==============================================================

1. Read the big-endian IDX image/label files (plain or gzip)
2. Pick 2·per_class samples of every digit: the first half trains, the
   second half tests (900 + 900 per digit gives the 9,000/9,000 split)
3. Scale pixels to [0, 1] by /255
4. Read and write the binary feature-file format shared with the SVM stage

Feature file layout (all little-endian):

    offset  type       value
    0       4 bytes    b"CDFF"
    4       uint32     version (1)
    8       uint32     count n
    12      uint32     dim d
    16      float64    n·d values, row-major
    ...     int32      n labels
"""

import gzip
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

from src.utils.errors import ConfigError, DataError, FormatError, LengthError, ShapeError
from src.utils.io import PathLike, atomic_write_bytes, sha256_file
from src.utils.numerics import derive_rng

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
IMAGE_SIDE = 28
PIXELS = IMAGE_SIDE * IMAGE_SIDE
N_CLASSES = 10

FEATURE_MAGIC = b"CDFF"
FEATURE_VERSION = 1
_FEATURE_HEADER = struct.Struct("<4sIII")


def _read_raw(path: PathLike) -> bytes:
    """File contents, transparently decompressing gzip"""
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def load_idx_images(path: PathLike) -> np.ndarray:
    """
    Read an IDX image file into an n × 784 uint8 matrix

    Header (big-endian int32): magic 2051, count, rows, cols; then pixels.
    """
    data = _read_raw(path)
    if len(data) < 16:
        raise LengthError(f"{path}: image header truncated ({len(data)} bytes)", path=str(path))
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGE_MAGIC:
        raise FormatError(f"{path}: expected image magic {IMAGE_MAGIC}, found {magic}",
                          expected=IMAGE_MAGIC, found=magic, path=str(path))
    if rows * cols != PIXELS:
        raise ShapeError(f"{path}: images are {rows}×{cols}, expected {IMAGE_SIDE}×{IMAGE_SIDE}",
                         rows=rows, cols=cols)
    expected = 16 + count * PIXELS
    if len(data) < expected:
        raise LengthError(f"{path}: expected {expected} bytes for {count} images, found {len(data)}",
                          expected=expected, found=len(data))
    return np.frombuffer(data, dtype=np.uint8, count=count * PIXELS, offset=16).reshape(count, PIXELS)


def load_idx_labels(path: PathLike) -> np.ndarray:
    """
    Read an IDX label file into a uint8 vector

    Header (big-endian int32): magic 2049, count; then one byte per label.
    """
    data = _read_raw(path)
    if len(data) < 8:
        raise LengthError(f"{path}: label header truncated ({len(data)} bytes)", path=str(path))
    magic, count = struct.unpack(">II", data[:8])
    if magic != LABEL_MAGIC:
        raise FormatError(f"{path}: expected label magic {LABEL_MAGIC}, found {magic}",
                          expected=LABEL_MAGIC, found=magic, path=str(path))
    if len(data) < 8 + count:
        raise LengthError(f"{path}: expected {8 + count} bytes for {count} labels, found {len(data)}",
                          expected=8 + count, found=len(data))
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=8).copy()


def write_idx_images(path: PathLike, images: np.ndarray) -> None:
    """Inverse of load_idx_images (used to build fixtures and subsets)"""
    images = np.asarray(images, dtype=np.uint8).reshape(-1, PIXELS)
    header = struct.pack(">IIII", IMAGE_MAGIC, images.shape[0], IMAGE_SIDE, IMAGE_SIDE)
    _write_maybe_gzip(path, header + images.tobytes())


def write_idx_labels(path: PathLike, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    _write_maybe_gzip(path, struct.pack(">II", LABEL_MAGIC, labels.shape[0]) + labels.tobytes())


def _write_maybe_gzip(path: PathLike, data: bytes) -> None:
    if str(path).endswith(".gz"):
        data = gzip.compress(data, mtime=0)
    atomic_write_bytes(path, data)


def normalize_pixels(raw: np.ndarray) -> np.ndarray:
    """Bytes 0..255 → float64 in [0, 1]"""
    return np.asarray(raw, dtype=np.float64) / 255.0


class Selection(Enum):
    FIRST_N = "first_n"
    SEEDED_RANDOM = "seeded_random"


@dataclass(frozen=True)
class SplitSpec:
    """per_class train samples and per_class test samples for every digit"""
    per_class: int = 900
    seed: int = 0
    selection: Selection = Selection.SEEDED_RANDOM

    def __post_init__(self):
        if not isinstance(self.selection, Selection):
            object.__setattr__(self, "selection", Selection(self.selection))
        if self.per_class < 1:
            raise ConfigError(f"per_class must be >= 1, got {self.per_class}")

    def to_dict(self) -> Dict[str, Any]:
        return {"per_class": self.per_class, "seed": self.seed, "selection": self.selection.value}

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "SplitSpec":
        unknown = set(doc) - {"per_class", "seed", "selection"}
        if unknown:
            raise ConfigError(f"Unknown split fields: {sorted(unknown)}", fields=sorted(unknown))
        try:
            return cls(int(doc.get("per_class", 900)), int(doc.get("seed", 0)),
                       Selection(doc.get("selection", "seeded_random")))
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid split spec: {e}")


@dataclass
class LabeledSet:
    """Images in [0, 1] with their digit labels and where they came from"""
    images: np.ndarray
    labels: np.ndarray
    source_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 2 or self.images.shape[0] != self.labels.shape[0]:
            raise DataError(f"{self.images.shape[0]} images but {self.labels.shape[0]} labels")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise DataError("Pixels must lie in [0, 1]")

    def __len__(self) -> int:
        return self.labels.shape[0]

    def class_counts(self) -> Dict[int, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


@dataclass
class RawMnist:
    """Unnormalized pool as read from disk"""
    images: np.ndarray
    labels: np.ndarray
    provenance: Dict[str, Any] = field(default_factory=dict)


def load_pool(images_path: PathLike, labels_path: PathLike, pool: str = "train") -> RawMnist:
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise DataError(f"{images.shape[0]} images but {labels.shape[0]} labels",
                        images=int(images.shape[0]), labels=int(labels.shape[0]))
    provenance = {
        "pool": pool,
        "images": {"file": Path(images_path).name, "sha256": sha256_file(images_path)},
        "labels": {"file": Path(labels_path).name, "sha256": sha256_file(labels_path)},
    }
    return RawMnist(images, labels, provenance)


def subset_and_split(raw: RawMnist, spec: SplitSpec) -> Tuple[LabeledSet, LabeledSet]:
    """
    Class-balanced, disjoint train/test subsets

    Per digit, 2·per_class indices are chosen (in file order for first_n,
    by a seeded permutation for seeded_random); the first per_class go to
    train and the rest to test. Each split is returned in file order.
    """
    labels = np.asarray(raw.labels, dtype=np.int64)
    rng = derive_rng(spec.seed, 0x5B117)
    train_idx, test_idx = [], []
    for digit in range(N_CLASSES):
        members = np.nonzero(labels == digit)[0]
        needed = 2 * spec.per_class
        if members.size < needed:
            raise DataError(f"Digit {digit} has {members.size} samples, {needed} needed",
                            digit=digit, available=int(members.size), needed=needed)
        if spec.selection is Selection.SEEDED_RANDOM:
            members = rng.permutation(members)
        chosen = members[:needed]
        train_idx.append(chosen[:spec.per_class])
        test_idx.append(chosen[spec.per_class:])

    provenance = dict(raw.provenance, split=spec.to_dict())

    def build(parts, name: str) -> LabeledSet:
        idx = np.sort(np.concatenate(parts))
        return LabeledSet(normalize_pixels(raw.images[idx]), labels[idx], idx.astype(np.int64),
                          dict(provenance, subset=name))

    return build(train_idx, "train"), build(test_idx, "test")


def encode_feature_file(features: np.ndarray, labels: np.ndarray) -> bytes:
    features = np.ascontiguousarray(features, dtype="<f8")
    labels = np.ascontiguousarray(labels, dtype="<i4")
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ShapeError(f"Features {features.shape} and labels {labels.shape} do not match")
    n, d = features.shape
    return _FEATURE_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, n, d) + features.tobytes() + labels.tobytes()


def write_feature_file(path: PathLike, features: np.ndarray, labels: np.ndarray) -> bytes:
    """Write features + labels atomically; returns the bytes written"""
    data = encode_feature_file(features, labels)
    atomic_write_bytes(path, data)
    return data


def read_feature_file(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _FEATURE_HEADER.size:
        raise LengthError(f"{path}: feature header truncated", path=str(path))
    magic, version, n, d = _FEATURE_HEADER.unpack(data[:_FEATURE_HEADER.size])
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: not a feature file", expected=FEATURE_MAGIC.decode(),
                          found=magic.decode("latin-1"))
    if version != FEATURE_VERSION:
        raise FormatError(f"{path}: unsupported feature file version", expected=FEATURE_VERSION,
                          found=version)
    expected = _FEATURE_HEADER.size + n * d * 8 + n * 4
    if len(data) != expected:
        raise LengthError(f"{path}: expected {expected} bytes, found {len(data)}",
                          expected=expected, found=len(data))
    offset = _FEATURE_HEADER.size
    features = np.frombuffer(data, dtype="<f8", count=n * d, offset=offset).reshape(n, d)
    labels = np.frombuffer(data, dtype="<i4", count=n, offset=offset + n * d * 8)
    return features.astype(np.float64), labels.astype(np.int64)


def save_labeled_set(path: PathLike, dataset: LabeledSet) -> bytes:
    return write_feature_file(path, dataset.images, dataset.labels)


def load_labeled_set(path: PathLike) -> LabeledSet:
    images, labels = read_feature_file(path)
    return LabeledSet(images, labels)
