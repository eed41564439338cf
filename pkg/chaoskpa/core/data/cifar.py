"""
CIFAR-10 binary batches: 3073-byte records, one label byte followed by the
1024 R, 1024 G and 1024 B pixels of a 32x32 image (channel-major planes).
"""

import logging
import os

import numpy as np

from .collection import ImageCollection
from ..utils.errors import DataMissingError, FormatError

logger = logging.getLogger(__name__)

RECORD_SIZE = 3073
SIDE = 32

BATCH_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)] + ["test_batch.bin"]


def parse_cifar_batch(raw, source="<bytes>"):
    remainder = len(raw) % RECORD_SIZE
    if remainder:
        raise FormatError(
            f"{source}: length {len(raw)} is not a multiple of the {RECORD_SIZE}-byte record",
            offset=len(raw) - remainder,
        )
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, RECORD_SIZE)
    labels = records[:, 0]
    images = records[:, 1:].reshape(-1, 3, SIDE, SIDE)
    return images, labels


def load_cifar10(batch_paths):
    if isinstance(batch_paths, (str, os.PathLike)):
        batch_paths = [batch_paths]

    collections = []
    for path in batch_paths:
        with open(path, "rb") as f:
            raw = f.read()
        if not raw:
            logger.warning("CIFAR-10 batch %s is empty", path)
            continue
        images, labels = parse_cifar_batch(raw, path)
        logger.debug("Loaded %d CIFAR-10 images from %s", len(images), path)
        collections.append(ImageCollection(images, labels))

    if not collections:
        return ImageCollection(np.zeros((0, 3, SIDE, SIDE), dtype=np.uint8), np.zeros(0, dtype=np.uint8))
    return ImageCollection.concatenate(collections)


def load_cifar10_dir(directory):
    """All six batches (60000 images). Looks in `directory` and `directory/cifar-10-batches-bin`."""
    for root in (directory, os.path.join(directory, "cifar-10-batches-bin")):
        paths = [os.path.join(root, name) for name in BATCH_FILES]
        if all(os.path.exists(path) for path in paths):
            return load_cifar10(paths)
    raise DataMissingError(
        "CIFAR-10 binary batches not found. Run `chaoskpa fetch` or point `paths.data_dir` at them.",
        [os.path.join(directory, "cifar-10-batches-bin", name) for name in BATCH_FILES],
    )
