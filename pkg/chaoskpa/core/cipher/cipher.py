"""
Substitution-only chaotic image cipher.

Each channel is XORed, in row-major scan order, with a keystream of length
W x H from that channel's map. Grayscale images use a single map; colour images
use the hybrid scheme (R: Logistic, G: Sine, B: Chebyshev).
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..chaos import ChaoticMapParams, MapFamily, keystream
from ..metrics import batch_correlation, channel_correlation
from ..utils.errors import ParameterError, UsageError

logger = logging.getLogger(__name__)


class CipherScheme(str, Enum):
    SINGLE_LOGISTIC = "single_logistic"
    SINGLE_SINE = "single_sine"
    SINGLE_CHEBYSHEV = "single_chebyshev"
    HYBRID_RGB = "hybrid_rgb"


SINGLE_MAP_FAMILY = {
    CipherScheme.SINGLE_LOGISTIC: MapFamily.LOGISTIC,
    CipherScheme.SINGLE_SINE: MapFamily.SINE,
    CipherScheme.SINGLE_CHEBYSHEV: MapFamily.CHEBYSHEV,
}
HYBRID_CHANNEL_FAMILIES = (MapFamily.LOGISTIC, MapFamily.SINE, MapFamily.CHEBYSHEV)


@dataclass(frozen=True, eq=False)
class ImageBytes:
    """An 8-bit image stored channel-major, then row-major: data has shape (C, H, W)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[np.newaxis]
        if data.ndim != 3 or data.shape[0] not in (1, 3):
            raise UsageError(
                f"ImageBytes needs shape (H, W), (1, H, W) or (3, H, W), got {data.shape}"
            )
        if data.dtype != np.uint8:
            if data.size and (data.min() < 0 or data.max() > 255):
                raise UsageError("ImageBytes values must lie in [0, 255]")
            data = data.astype(np.uint8)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_bytes(cls, width, height, channels, raw):
        raw = np.frombuffer(bytes(raw), dtype=np.uint8)
        if raw.size != width * height * channels:
            raise UsageError(
                f"Expected {width * height * channels} bytes for a {width}x{height}x{channels} image, got {raw.size}"
            )
        return cls(raw.reshape(channels, height, width))

    @property
    def channels(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    def to_bytes(self):
        return self.data.tobytes()

    def __eq__(self, other):
        if not isinstance(other, ImageBytes):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"ImageBytes({self.width}x{self.height}x{self.channels})"


@dataclass(kw_only=True, frozen=True)
class CipherKey:
    scheme: CipherScheme
    logistic: ChaoticMapParams | None = None
    sine: ChaoticMapParams | None = None
    chebyshev: ChaoticMapParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", CipherScheme(self.scheme))
        for family in self.required_families():
            params = self._params_for(family)
            if params is None:
                raise ParameterError(
                    f"Scheme {self.scheme.value} needs {family.value} map params"
                )
            if params.family is not family:
                raise ParameterError(
                    f"The {family.value} slot holds {params.family.value} params"
                )

    def required_families(self):
        if self.scheme is CipherScheme.HYBRID_RGB:
            return HYBRID_CHANNEL_FAMILIES
        return (SINGLE_MAP_FAMILY[self.scheme],)

    @property
    def channels(self):
        return len(self.required_families())

    def channel_params(self):
        """Map params per channel, in channel order."""
        return [self._params_for(family) for family in self.required_families()]

    def _params_for(self, family):
        return {
            MapFamily.LOGISTIC: self.logistic,
            MapFamily.SINE: self.sine,
            MapFamily.CHEBYSHEV: self.chebyshev,
        }[family]

    def as_dict(self):
        maps = {
            family.value: self._params_for(family).as_dict()
            for family in self.required_families()
        }
        return {"scheme": self.scheme.value, "maps": maps}

    @classmethod
    def from_dict(cls, data):
        maps = {
            name: ChaoticMapParams(**params) for name, params in data["maps"].items()
        }
        return cls(scheme=data["scheme"], **maps)


def keystream_block(key, height, width):
    """The (C, H, W) block of key bytes XORed onto every image of that size."""
    planes = [
        keystream(params, width * height).bytes.reshape(height, width)
        for params in key.channel_params()
    ]
    return np.stack(planes)


def _check_channels(key, channels):
    if channels != key.channels:
        raise UsageError(
            f"Scheme {key.scheme.value} encrypts {key.channels}-channel images, got {channels} channel(s)"
        )


def encrypt(key, plain):
    _check_channels(key, plain.channels)
    block = keystream_block(key, plain.height, plain.width)
    return ImageBytes(np.bitwise_xor(plain.data, block))


def decrypt(key, cipher):
    # XOR is an involution.
    return encrypt(key, cipher)


def encrypt_array(key, images):
    """Encrypts a stacked (N, C, H, W) uint8 array under one key."""
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 4:
        raise UsageError(f"Expected an (N, C, H, W) array, got shape {images.shape}")
    _check_channels(key, images.shape[1])
    block = keystream_block(key, images.shape[2], images.shape[3])
    return np.bitwise_xor(images, block[np.newaxis])


decrypt_array = encrypt_array


@dataclass
class AuditRecord:
    count: int
    skipped: int
    mean_abs: float
    max_abs: float
    channel_mean_abs: float | None = None

    def as_dict(self):
        return {
            "count": self.count,
            "skipped": self.skipped,
            "mean_abs": self.mean_abs,
            "max_abs": self.max_abs,
            "channel_mean_abs": self.channel_mean_abs,
        }


def correlation_audit(key, images):
    """
    Plaintext-ciphertext correlation over a set of images. For three-channel
    schemes it also reports the mean |corr| between ciphertext channel planes.
    """
    plains = [image if isinstance(image, ImageBytes) else ImageBytes(image) for image in images]
    if not plains:
        raise UsageError("correlation_audit needs at least one image")

    ciphers = [encrypt(key, plain) for plain in plains]
    report = batch_correlation(
        [c.data for c in ciphers], [p.data for p in plains]
    )

    channel_mean_abs = None
    if key.channels > 1:
        values = [
            abs(v) for c in ciphers for v in channel_correlation(c.data).values()
        ]
        channel_mean_abs = float(np.mean(values)) if values else float("nan")

    record = AuditRecord(
        count=report.count,
        skipped=report.skipped_count,
        mean_abs=report.mean_abs,
        max_abs=report.max_abs,
        channel_mean_abs=channel_mean_abs,
    )
    logger.info("Correlation audit: %s", record.as_dict())
    return record
