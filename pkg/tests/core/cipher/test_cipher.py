import unittest
from unittest import mock

import numpy as np
import pytest

from chaoskpa.core.chaos import ChaoticMapParams, keystream
from chaoskpa.core.cipher import (
    CipherKey,
    CipherScheme,
    ImageBytes,
    correlation_audit,
    decrypt,
    decrypt_array,
    encrypt,
    encrypt_array,
    keystream_block,
)
from chaoskpa.core.metrics import batch_correlation
from chaoskpa.core.utils.errors import ParameterError, UsageError
from tests.helpers import blob_images

LOGISTIC = ChaoticMapParams(family="logistic", control=3.601, seed=0.1)
SINE = ChaoticMapParams(family="sine", control=0.95, seed=0.154)
CHEBYSHEV = ChaoticMapParams(family="chebyshev", control=5, seed=0.165)

SINGLE = CipherKey(scheme="single_logistic", logistic=LOGISTIC)
HYBRID = CipherKey(scheme="hybrid_rgb", logistic=LOGISTIC, sine=SINE, chebyshev=CHEBYSHEV)


class TestCipherKey(unittest.TestCase):
    def test_missing_map_params(self):
        with self.assertRaises(ParameterError):
            CipherKey(scheme="hybrid_rgb", logistic=LOGISTIC)

    def test_wrong_family_in_slot(self):
        with self.assertRaises(ParameterError):
            CipherKey(scheme="single_sine", sine=LOGISTIC)

    def test_dict_round_trip(self):
        self.assertEqual(CipherKey.from_dict(HYBRID.as_dict()), HYBRID)

    def test_channels(self):
        self.assertEqual(SINGLE.channels, 1)
        self.assertEqual(HYBRID.channels, 3)
        self.assertIs(HYBRID.scheme, CipherScheme.HYBRID_RGB)


class TestEncrypt(unittest.TestCase):
    def test_round_trip_grayscale(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            plain = ImageBytes(rng.integers(0, 256, size=(28, 28), dtype=np.uint8))
            self.assertEqual(decrypt(SINGLE, encrypt(SINGLE, plain)), plain)

    def test_round_trip_colour(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            plain = ImageBytes(rng.integers(0, 256, size=(3, 32, 32), dtype=np.uint8))
            self.assertEqual(decrypt(HYBRID, encrypt(HYBRID, plain)), plain)

    def test_frozen_ciphertext(self):
        plain = ImageBytes(np.array([[10, 20], [30, 40]], dtype=np.uint8))
        cipher = encrypt(SINGLE, plain)
        self.assertEqual(cipher.data.ravel().tolist(), [143, 64, 217, 141])

    def test_hybrid_sine_params_only_touch_green(self):
        # Arrange
        other = CipherKey(
            scheme="hybrid_rgb", logistic=LOGISTIC, sine=SINE.with_seed(0.2), chebyshev=CHEBYSHEV
        )
        plain = ImageBytes(np.random.default_rng(2).integers(0, 256, size=(3, 32, 32), dtype=np.uint8))

        # Act
        a = encrypt(HYBRID, plain).data
        b = encrypt(other, plain).data

        # Assert
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[2], b[2])
        self.assertGreater(np.count_nonzero(a[1] != b[1]), 0.9 * 32 * 32)

    def test_nearby_seed_does_not_decrypt(self):
        images = blob_images(100)
        wrong = CipherKey(scheme="single_logistic", logistic=LOGISTIC.with_seed(0.1 + 1e-10))

        decrypted = decrypt_array(wrong, encrypt_array(SINGLE, images))

        report = batch_correlation(list(decrypted), list(images))
        self.assertEqual(report.count, 100)
        self.assertLess(report.mean_abs, 0.2)

    def test_zero_image_reveals_keystream(self):
        cipher = encrypt(SINGLE, ImageBytes(np.zeros((28, 28), dtype=np.uint8)))
        np.testing.assert_array_equal(
            cipher.data.ravel(), keystream(LOGISTIC, 28 * 28).bytes
        )

    def test_hybrid_channels_use_their_own_maps(self):
        block = keystream_block(HYBRID, 32, 32)
        for channel, params in enumerate((LOGISTIC, SINE, CHEBYSHEV)):
            np.testing.assert_array_equal(
                block[channel].ravel(), keystream(params, 32 * 32).bytes
            )

    def test_channel_mismatch(self):
        with self.assertRaises(UsageError):
            encrypt(SINGLE, ImageBytes(np.zeros((3, 32, 32), dtype=np.uint8)))
        with self.assertRaises(UsageError):
            encrypt(HYBRID, ImageBytes(np.zeros((32, 32), dtype=np.uint8)))

    def test_array_matches_per_image(self):
        images = blob_images(5)
        stacked = encrypt_array(SINGLE, images)
        for image, cipher in zip(images, stacked):
            self.assertEqual(encrypt(SINGLE, ImageBytes(image)), ImageBytes(cipher))
        np.testing.assert_array_equal(decrypt_array(SINGLE, stacked), images)

    def test_image_bytes_from_bytes(self):
        raw = bytes(range(12))
        image = ImageBytes.from_bytes(4, 3, 1, raw)
        self.assertEqual((image.width, image.height, image.channels), (4, 3, 1))
        self.assertEqual(image.to_bytes(), raw)
        with self.assertRaises(UsageError):
            ImageBytes.from_bytes(4, 4, 1, raw)


class TestCorrelationAudit(unittest.TestCase):
    @mock.patch("chaoskpa.core.cipher.cipher.keystream")
    def test_identity_keystream_is_fully_correlated(self, mock_keystream):
        # Arrange
        mock_keystream.side_effect = lambda params, length: mock.Mock(
            bytes=np.zeros(length, dtype=np.uint8)
        )

        # Act
        record = correlation_audit(SINGLE, list(blob_images(10)))

        # Assert
        self.assertAlmostEqual(record.mean_abs, 1.0)
        self.assertEqual(record.count, 10)

    def test_grayscale_ciphertexts_are_uncorrelated(self):
        record = correlation_audit(SINGLE, list(blob_images(100)))
        self.assertLess(record.mean_abs, 0.15)
        self.assertIsNone(record.channel_mean_abs)

    def test_hybrid_reports_inter_channel_correlation(self):
        images = np.repeat(blob_images(20, size=32), 3, axis=1)
        record = correlation_audit(HYBRID, list(images))
        self.assertLess(record.mean_abs, 0.15)
        self.assertLess(record.channel_mean_abs, 0.15)

    def test_empty_input(self):
        with self.assertRaises(UsageError):
            correlation_audit(SINGLE, [])


@pytest.mark.slow
@pytest.mark.parametrize("key,shape", [(SINGLE, (1, 28, 28)), (HYBRID, (3, 32, 32))])
def test_round_trip_ten_thousand_images(key, shape):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(10000, *shape), dtype=np.uint8)
    np.testing.assert_array_equal(decrypt_array(key, encrypt_array(key, images)), images)
