import gzip
import os
import struct
import tempfile
import unittest

import numpy as np
import pytest

from chaoskpa.core.data import (
    ImageCollection,
    load_cifar10,
    load_cifar10_dir,
    load_mnist,
    load_mnist_dir,
    read_pnm,
    stack_images,
    write_pnm,
)
from chaoskpa.core.data.cifar import RECORD_SIZE, parse_cifar_batch
from chaoskpa.core.data.mnist import parse_idx_images, parse_idx_labels
from chaoskpa.core.cipher import ImageBytes
from chaoskpa.core.utils.errors import DataMissingError, FormatError, UsageError
from tests.helpers import blob_images, write_idx_images, write_idx_labels


class TestIdx(unittest.TestCase):
    def setUp(self):
        self.images = blob_images(5)

    def raw(self):
        return struct.pack(">IIII", 2051, 5, 28, 28) + self.images.tobytes()

    def test_parse(self):
        parsed = parse_idx_images(self.raw())
        self.assertEqual(parsed.shape, (5, 1, 28, 28))
        np.testing.assert_array_equal(parsed, self.images)

    def test_bad_magic_reports_offset_zero(self):
        raw = struct.pack(">I", 2049) + self.raw()[4:]
        with self.assertRaises(FormatError) as raised:
            parse_idx_images(raw)
        self.assertEqual(raised.exception.offset, 0)
        self.assertEqual(raised.exception.exit_code, 2)

    def test_truncated(self):
        raw = self.raw()[:-10]
        with self.assertRaises(FormatError) as raised:
            parse_idx_images(raw)
        self.assertEqual(raised.exception.offset, len(raw))

    def test_truncated_header(self):
        with self.assertRaises(FormatError):
            parse_idx_images(b"\x00\x00\x08\x03")

    def test_trailing_bytes(self):
        with self.assertRaises(FormatError) as raised:
            parse_idx_images(self.raw() + b"\x00")
        self.assertEqual(raised.exception.offset, 16 + 5 * 28 * 28)

    def test_labels(self):
        labels = parse_idx_labels(struct.pack(">II", 2049, 3) + bytes([7, 1, 9]))
        self.assertEqual(list(labels), [7, 1, 9])
        with self.assertRaises(FormatError):
            parse_idx_labels(struct.pack(">II", 2049, 4) + bytes([7, 1, 9]))


def test_load_mnist_plain_and_gzip(tmp_path):
    images = blob_images(6)
    plain = write_idx_images(str(tmp_path / "plain-idx3-ubyte"), images)
    packed = write_idx_images(str(tmp_path / "packed-idx3-ubyte.gz"), images, compress=True)
    labels = write_idx_labels(str(tmp_path / "labels-idx1-ubyte"), [0, 1, 2, 3, 4, 5])

    a = load_mnist(plain, labels)
    b = load_mnist(packed)

    np.testing.assert_array_equal(a.array, b.array)
    assert list(a.labels) == [0, 1, 2, 3, 4, 5]
    assert b.labels is None
    assert a[0] == ImageBytes(images[0])


def test_corrupt_gzip(tmp_path):
    path = tmp_path / "broken.gz"
    path.write_bytes(gzip.compress(b"x" * 100)[:20])
    with pytest.raises(FormatError):
        load_mnist(str(path))


def test_label_count_mismatch(tmp_path):
    images = write_idx_images(str(tmp_path / "i"), blob_images(3))
    labels = write_idx_labels(str(tmp_path / "l"), [1, 2])
    with pytest.raises(UsageError):
        load_mnist(images, labels)


def test_load_mnist_dir_concatenates_train_and_test(mnist_dir):
    collection = load_mnist_dir(mnist_dir)
    assert len(collection) == 50
    assert collection.array.shape == (50, 1, 28, 28)
    assert list(collection.labels[:3]) == [0, 1, 2]


def test_load_mnist_dir_missing(tmp_path):
    with pytest.raises(DataMissingError) as raised:
        load_mnist_dir(str(tmp_path))
    assert len(raised.value.expected_paths) == 4
    assert "train-images-idx3-ubyte" in raised.value.message


def cifar_record(label, image):
    return bytes([label]) + image.tobytes()


class TestCifar(unittest.TestCase):
    def test_layout_is_channel_major(self):
        # Arrange
        image = np.zeros((3, 32, 32), dtype=np.uint8)
        image[0, 0, 0], image[1, 0, 1], image[2, 31, 31] = 10, 20, 30

        # Act
        images, labels = parse_cifar_batch(cifar_record(6, image) * 2)

        # Assert
        self.assertEqual(images.shape, (2, 3, 32, 32))
        self.assertEqual(list(labels), [6, 6])
        self.assertEqual(images[1, 0, 0, 0], 10)
        self.assertEqual(images[1, 1, 0, 1], 20)
        self.assertEqual(images[1, 2, 31, 31], 30)

    def test_bad_length(self):
        raw = cifar_record(1, np.zeros((3, 32, 32), dtype=np.uint8)) + b"\x00" * 5
        with self.assertRaises(FormatError) as raised:
            parse_cifar_batch(raw)
        self.assertEqual(raised.exception.offset, RECORD_SIZE)

    def test_empty_batch_warns(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "data_batch_1.bin")
            open(path, "wb").close()
            with self.assertLogs("chaoskpa.core.data.cifar", level="WARNING"):
                collection = load_cifar10(path)
        self.assertEqual(len(collection), 0)
        self.assertEqual(collection.array.shape[1:], (3, 32, 32))

    def test_missing_dir(self):
        with self.assertRaises(DataMissingError):
            load_cifar10_dir("/nonexistent/cifar")


def test_load_cifar10_dir_reads_six_batches(tmp_path):
    rng = np.random.default_rng(0)
    root = tmp_path / "cifar-10-batches-bin"
    root.mkdir()
    for name in [f"data_batch_{i}.bin" for i in range(1, 6)] + ["test_batch.bin"]:
        image = rng.integers(0, 256, (3, 32, 32), dtype=np.uint8)
        (root / name).write_bytes(cifar_record(3, image))

    collection = load_cifar10_dir(str(tmp_path))

    assert len(collection) == 6
    assert collection[0].channels == 3


class TestCollections(unittest.TestCase):
    def test_slicing_keeps_labels(self):
        collection = ImageCollection(blob_images(4), labels=[1, 2, 3, 4])
        part = collection[1:3]
        self.assertIsInstance(part, ImageCollection)
        self.assertEqual(list(part.labels), [2, 3])

    def test_mixed_channels(self):
        with self.assertRaises(UsageError):
            stack_images([np.zeros((1, 4, 4)), np.zeros((3, 4, 4))])

    def test_mixed_sizes(self):
        with self.assertRaises(UsageError):
            stack_images([np.zeros((4, 4)), np.zeros((5, 5))])


class TestNetpbm(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def path(self, name):
        return os.path.join(self.directory.name, name)

    def test_gray_and_color(self):
        rng = np.random.default_rng(0)
        for shape, magic in (((1, 5, 7), b"P5"), ((3, 4, 6), b"P6")):
            image = ImageBytes(rng.integers(0, 256, shape, dtype=np.uint8))
            write_pnm(self.path("image"), image)
            with open(self.path("image"), "rb") as f:
                self.assertEqual(f.read(2), magic)
            self.assertEqual(read_pnm(self.path("image")), image)

    def test_header_comments(self):
        with open(self.path("c.pgm"), "wb") as f:
            f.write(b"P5\n# written by hand\n2 1\n255\n\x01\x02")
        np.testing.assert_array_equal(read_pnm(self.path("c.pgm")).data, [[[1, 2]]])

    def test_rejects_ascii_and_deep_files(self):
        with open(self.path("a.pgm"), "wb") as f:
            f.write(b"P2\n1 1\n255\n0\n")
        with self.assertRaises(FormatError):
            read_pnm(self.path("a.pgm"))

        with open(self.path("d.pgm"), "wb") as f:
            f.write(b"P5\n1 1\n65535\n\x00\x00")
        with self.assertRaises(FormatError):
            read_pnm(self.path("d.pgm"))

    def test_truncated_pixels(self):
        with open(self.path("t.pgm"), "wb") as f:
            f.write(b"P5\n4 4\n255\n\x00\x00")
        with self.assertRaises(FormatError):
            read_pnm(self.path("t.pgm"))
