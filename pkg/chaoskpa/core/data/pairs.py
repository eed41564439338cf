import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from .collection import ImageCollection, stack_images
from ..cipher import ImageBytes, encrypt_array
from ..utils.errors import FormatError, ParameterError, UsageError

logger = logging.getLogger(__name__)

TRAIN = 0
TEST = 1
UNASSIGNED = 255

DEFAULT_TRAIN_FRACTION = 0.9


@dataclass(eq=False)
class PairSet:
    """
    Aligned plaintext/ciphertext stacks of shape (N, C, H, W), all encrypted under
    one key, with a per-index split label (TRAIN, TEST or UNASSIGNED).
    """

    plaintexts: np.ndarray
    ciphertexts: np.ndarray
    key: object
    split_labels: np.ndarray | None = None
    split_seed: int | None = None
    train_fraction: float | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.plaintexts.shape != self.ciphertexts.shape:
            raise UsageError(
                f"Plaintexts {self.plaintexts.shape} and ciphertexts {self.ciphertexts.shape} are not aligned"
            )
        if self.split_labels is None:
            self.split_labels = np.full(len(self.plaintexts), UNASSIGNED, dtype=np.uint8)
        if len(self.split_labels) != len(self.plaintexts):
            raise UsageError(
                f"{len(self.split_labels)} split labels for {len(self.plaintexts)} pairs"
            )

    def __len__(self):
        return len(self.plaintexts)

    @property
    def image_shape(self):
        return tuple(self.plaintexts.shape[1:])

    @property
    def is_split(self):
        return len(self) > 0 and not np.any(self.split_labels == UNASSIGNED)

    def train_indices(self):
        return np.flatnonzero(self.split_labels == TRAIN)

    def test_indices(self):
        return np.flatnonzero(self.split_labels == TEST)

    def plaintext(self, index):
        return ImageBytes(self.plaintexts[index])

    def ciphertext(self, index):
        return ImageBytes(self.ciphertexts[index])

    def verify(self, fraction=0.01, seed=0):
        """Re-encrypts a random sample of plaintexts and checks them against the stored ciphertexts."""
        if not len(self):
            return 0
        count = max(1, int(len(self) * fraction))
        indices = np.sort(np.random.default_rng(seed).choice(len(self), size=count, replace=False))
        reencrypted = encrypt_array(self.key, self.plaintexts[indices])
        mismatched = indices[np.any(reencrypted != self.ciphertexts[indices], axis=(1, 2, 3))]
        if len(mismatched):
            raise FormatError(
                f"{len(mismatched)} of {count} sampled ciphertexts do not match their plaintexts under the stored key "
                f"(first: pair {int(mismatched[0])})"
            )
        return count


def make_pairs(images, key):
    """Encrypts every image under one fixed key. Labels carried by an ImageCollection are kept."""
    plaintexts = stack_images(images)
    labels = images.labels if isinstance(images, ImageCollection) else None
    ciphertexts = encrypt_array(key, plaintexts)
    logger.info("Encrypted %d images under %s", len(plaintexts), key.scheme.value)
    return PairSet(np.asarray(plaintexts, dtype=np.uint8), ciphertexts, key, labels=labels)


def train_count(total, train_fraction):
    # Guards against 0.9 * n landing a hair below an integer.
    return int(math.floor(total * train_fraction + 1e-9))


def split(pairs, train_fraction=DEFAULT_TRAIN_FRACTION, seed=0):
    """Uniformly random permutation from seed; the first floor(N * fraction) go to training."""
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError(f"train_fraction must lie in (0, 1), got {train_fraction}")

    order = np.random.default_rng(seed).permutation(len(pairs))
    labels = np.full(len(pairs), TEST, dtype=np.uint8)
    labels[order[: train_count(len(pairs), train_fraction)]] = TRAIN
    return dataclasses.replace(
        pairs, split_labels=labels, split_seed=seed, train_fraction=train_fraction
    )
