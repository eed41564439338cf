"""
On-disk pair archive: a directory holding `manifest.yaml` plus raw blobs.

    plaintexts.bin   N x C x H x W bytes
    ciphertexts.bin  N x C x H x W bytes
    split.bin        N bytes (0 train, 1 test, 255 unassigned)
    labels.bin       N bytes, only when the source dataset carried labels

The manifest holds the cipher key, so every archive can be regenerated and audited.
"""

import hashlib
import logging
import os

import numpy as np
import yaml

from .pairs import TEST, TRAIN, PairSet
from ..cipher import CipherKey
from ..utils.errors import DataMissingError, FormatError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST = "manifest.yaml"
BLOBS = ("plaintexts", "ciphertexts", "split", "labels")


def _blob_path(directory, name):
    return os.path.join(directory, f"{name}.bin")


def write_archive(pairs, directory, dataset=None):
    os.makedirs(directory, exist_ok=True)
    count = len(pairs)
    channels, height, width = pairs.image_shape

    blobs = {
        "plaintexts": np.ascontiguousarray(pairs.plaintexts, dtype=np.uint8).tobytes(),
        "ciphertexts": np.ascontiguousarray(pairs.ciphertexts, dtype=np.uint8).tobytes(),
        "split": np.asarray(pairs.split_labels, dtype=np.uint8).tobytes(),
    }
    if pairs.labels is not None:
        blobs["labels"] = np.asarray(pairs.labels, dtype=np.uint8).tobytes()
    elif os.path.exists(_blob_path(directory, "labels")):
        os.remove(_blob_path(directory, "labels"))

    for name, data in blobs.items():
        with open(_blob_path(directory, name), "wb") as f:
            f.write(data)

    manifest = {
        "format_version": FORMAT_VERSION,
        "dataset": dataset,
        "count": count,
        "channels": channels,
        "height": height,
        "width": width,
        "key": pairs.key.as_dict(),
        "split_seed": pairs.split_seed,
        "train_fraction": pairs.train_fraction,
        "train_count": int(np.sum(pairs.split_labels == TRAIN)),
        "test_count": int(np.sum(pairs.split_labels == TEST)),
        "md5": {name: hashlib.md5(data).hexdigest() for name, data in blobs.items()},
    }
    with open(os.path.join(directory, MANIFEST), "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest, f, sort_keys=True)

    logger.info("Wrote %d pairs to %s", count, directory)
    return directory


def read_manifest(directory):
    path = os.path.join(directory, MANIFEST)
    if not os.path.exists(path):
        raise DataMissingError(
            f"No pair archive at {directory}. Run `chaoskpa genpairs` first.", [path]
        )
    with open(path, "r", encoding="utf-8") as f:
        try:
            manifest = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise FormatError(f"{path} is not valid YAML: {e}") from e
    if not isinstance(manifest, dict):
        raise FormatError(f"{path} does not hold a manifest mapping")
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(
            f"{path} has format_version {version!r}; this build reads version {FORMAT_VERSION}"
        )
    return manifest


def read_archive(directory):
    manifest = read_manifest(directory)
    count = manifest["count"]
    shape = (count, manifest["channels"], manifest["height"], manifest["width"])
    image_bytes = int(np.prod(shape))

    arrays = {}
    for name in BLOBS:
        path = _blob_path(directory, name)
        if name not in manifest.get("md5", {}):
            continue
        if not os.path.exists(path):
            raise DataMissingError(f"Pair archive {directory} is incomplete", [path])
        with open(path, "rb") as f:
            data = f.read()
        if hashlib.md5(data).hexdigest() != manifest["md5"][name]:
            raise FormatError(f"{path} does not match the checksum in the manifest")
        expected = image_bytes if name in ("plaintexts", "ciphertexts") else count
        if len(data) != expected:
            raise FormatError(
                f"{path} holds {len(data)} bytes, expected {expected}",
                offset=min(len(data), expected),
            )
        arrays[name] = np.frombuffer(data, dtype=np.uint8)

    return PairSet(
        plaintexts=arrays["plaintexts"].reshape(shape),
        ciphertexts=arrays["ciphertexts"].reshape(shape),
        key=CipherKey.from_dict(manifest["key"]),
        split_labels=arrays["split"].copy(),
        split_seed=manifest.get("split_seed"),
        train_fraction=manifest.get("train_fraction"),
        labels=arrays.get("labels"),
    )
