import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.data.mnist import PIXELS, write_idx_images, write_idx_labels  # noqa: E402


def synthetic_digits(per_digit: int, seed: int = 0):
    """
    Byte images whose class is readable from a bright 28-pixel band

    Digit d lights up image row 2·d + 4 on top of low-level noise.
    """
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(10, dtype=np.uint8), per_digit)
    rng.shuffle(labels)
    images = rng.integers(0, 40, size=(labels.size, PIXELS), dtype=np.uint8)
    for k, digit in enumerate(labels):
        row = 2 * int(digit) + 4
        images[k, row * 28:(row + 1) * 28] = 255
    return images, labels


@pytest.fixture
def mnist_files(tmp_path):
    """Plain (uncompressed) IDX files with 8 samples per digit"""
    images, labels = synthetic_digits(8)
    images_path = tmp_path / "train-images-idx3-ubyte"
    labels_path = tmp_path / "train-labels-idx1-ubyte"
    write_idx_images(images_path, images)
    write_idx_labels(labels_path, labels)
    return images_path, labels_path, images, labels
