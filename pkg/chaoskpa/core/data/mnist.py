"""
MNIST in the big-endian IDX layout:

    [offset] [type]          [value]
    0000     32 bit integer  2051 (images) / 2049 (labels)
    0004     32 bit integer  number of items
    0008     32 bit integer  rows          (images only)
    0012     32 bit integer  columns       (images only)
    0016     unsigned byte   pixels, row-major
"""

import gzip
import logging
import os
import struct

import numpy as np

from .collection import ImageCollection
from ..utils.errors import DataMissingError, FormatError, UsageError

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def read_raw(path):
    """Reads a file, transparently gunzipping it when it carries the gzip magic."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as e:
            raise FormatError(f"{path} is not a valid gzip stream: {e}") from e
    return raw


def parse_idx_images(raw, source="<bytes>"):
    if len(raw) < 16:
        raise FormatError(f"{source}: truncated IDX image header", offset=len(raw))
    magic, count, rows, cols = struct.unpack_from(">IIII", raw, 0)
    if magic != IMAGE_MAGIC:
        raise FormatError(
            f"{source}: bad IDX image magic {magic}, expected {IMAGE_MAGIC}", offset=0
        )
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise FormatError(
            f"{source}: truncated, header promises {count} images of {rows}x{cols} ({expected} bytes), file has {len(raw)}",
            offset=len(raw),
        )
    if len(raw) > expected:
        raise FormatError(f"{source}: {len(raw) - expected} trailing bytes", offset=expected)
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, 1, rows, cols)


def parse_idx_labels(raw, source="<bytes>"):
    if len(raw) < 8:
        raise FormatError(f"{source}: truncated IDX label header", offset=len(raw))
    magic, count = struct.unpack_from(">II", raw, 0)
    if magic != LABEL_MAGIC:
        raise FormatError(
            f"{source}: bad IDX label magic {magic}, expected {LABEL_MAGIC}", offset=0
        )
    if len(raw) != 8 + count:
        raise FormatError(
            f"{source}: header promises {count} labels, file holds {len(raw) - 8}",
            offset=min(len(raw), 8 + count),
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=8)


def load_mnist(images_path, labels_path=None):
    """Loads one IDX image file (and optionally its label file) as an ImageCollection."""
    images = parse_idx_images(read_raw(images_path), images_path)
    labels = None
    if labels_path is not None:
        labels = parse_idx_labels(read_raw(labels_path), labels_path)
        if len(labels) != len(images):
            raise UsageError(
                f"{labels_path} holds {len(labels)} labels for {len(images)} images in {images_path}"
            )
    logger.debug("Loaded %d MNIST images from %s", len(images), images_path)
    return ImageCollection(images, labels)


def _find(directory, name):
    for candidate in (name, name + ".gz", name.replace("-idx", ".idx")):
        path = os.path.join(directory, candidate)
        if os.path.exists(path):
            return path
    return None


def load_mnist_dir(directory):
    """
    Loads the training and test files together (70000 images for the standard
    distribution). Looks in `directory` and `directory/mnist`.
    """
    collections = []
    missing = []
    for part in ("train", "test"):
        found = []
        for name in MNIST_FILES[part]:
            path = _find(directory, name) or _find(os.path.join(directory, "mnist"), name)
            if path is None:
                missing.append(os.path.join(directory, name + "[.gz]"))
            found.append(path)
        if None not in found:
            collections.append(load_mnist(*found))
    if missing:
        raise DataMissingError(
            "MNIST files not found. Run `chaoskpa fetch` or point `paths.data_dir` at them.",
            missing,
        )
    return ImageCollection.concatenate(collections)
