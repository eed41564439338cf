import gzip
import os
import struct

import numpy as np


def blob_images(count, size=28, seed=0):
    """MNIST-like digits: a bright blob on a dark background, never constant."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:size, :size]
    images = np.zeros((count, 1, size, size), dtype=np.uint8)
    for i in range(count):
        cy, cx = rng.uniform(size * 0.3, size * 0.7, size=2)
        radius = rng.uniform(size * 0.15, size * 0.3)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 < radius**2
        images[i, 0][mask] = rng.integers(150, 256)
    return images


def write_idx_images(path, images, compress=False):
    count, _, rows, cols = images.shape
    raw = struct.pack(">IIII", 2051, count, rows, cols) + images.astype(np.uint8).tobytes()
    opener = gzip.open if compress else open
    with opener(path, "wb") as f:
        f.write(raw)
    return path


def write_idx_labels(path, labels):
    raw = struct.pack(">II", 2049, len(labels)) + np.asarray(labels, dtype=np.uint8).tobytes()
    with open(path, "wb") as f:
        f.write(raw)
    return path


def noise_images(count, size=28, seed=0):
    return np.random.default_rng(seed).integers(0, 256, size=(count, 1, size, size), dtype=np.uint8)


def write_mnist_dir(directory, train_count=40, test_count=10, seed=0, make_images=blob_images):
    images = make_images(train_count + test_count, seed=seed)
    labels = np.arange(train_count + test_count) % 10
    write_idx_images(os.path.join(directory, "train-images-idx3-ubyte"), images[:train_count])
    write_idx_labels(os.path.join(directory, "train-labels-idx1-ubyte"), labels[:train_count])
    write_idx_images(os.path.join(directory, "t10k-images-idx3-ubyte"), images[train_count:])
    write_idx_labels(os.path.join(directory, "t10k-labels-idx1-ubyte"), labels[train_count:])
    return images

