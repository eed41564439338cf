import math
import unittest

import numpy as np
import pytest

from chaoskpa.core.chaos import ChaoticMapParams, MapFamily, keystream, map_step, orbit
from chaoskpa.core.utils.errors import ParameterError

LOGISTIC = ChaoticMapParams(family="logistic", control=3.601, seed=0.1)
SINE = ChaoticMapParams(family="sine", control=0.95, seed=0.154)
CHEBYSHEV = ChaoticMapParams(family="chebyshev", control=5, seed=0.165)


def reference_bytes(step, seed, length, burn_in=1000, shift=0.0, scale=1.0):
    # Written independently of the library: plain loop, same recurrence order.
    x = seed
    for _ in range(burn_in):
        x = step(x)
    out = []
    for _ in range(length):
        x = step(x)
        out.append(math.floor((x + shift) / scale * 1e14) % 256)
    return np.array(out, dtype=np.uint8)


class TestMapStep(unittest.TestCase):
    def test_logistic_step(self):
        self.assertAlmostEqual(map_step(LOGISTIC, 0.1), 0.32409, places=12)

    def test_sine_step(self):
        self.assertAlmostEqual(map_step(SINE, 0.154), 0.95 * math.sin(math.pi * 0.154), places=15)
        self.assertAlmostEqual(map_step(SINE, 0.154), 0.44189, places=4)

    def test_chebyshev_step_matches_polynomial(self):
        x = 0.165
        t5 = 16 * x**5 - 20 * x**3 + 5 * x
        self.assertAlmostEqual(map_step(CHEBYSHEV, x), t5, places=12)
        self.assertAlmostEqual(map_step(CHEBYSHEV, x), 0.7371142696, places=9)

    def test_state_out_of_domain(self):
        with self.assertRaises(ParameterError):
            map_step(LOGISTIC, 1.5)
        with self.assertRaises(ParameterError):
            map_step(CHEBYSHEV, -1.5)


class TestParams(unittest.TestCase):
    def test_rejects_out_of_range_controls(self):
        for family, control in [("logistic", 4.5), ("sine", 0.0), ("sine", 1.2), ("chebyshev", 1.0)]:
            with self.subTest(family=family, control=control):
                with self.assertRaises(ParameterError):
                    ChaoticMapParams(family=family, control=control, seed=0.3)

    def test_rejects_out_of_range_seeds(self):
        with self.assertRaises(ParameterError):
            ChaoticMapParams(family="logistic", control=3.9, seed=0.0)
        with self.assertRaises(ParameterError):
            ChaoticMapParams(family="chebyshev", control=4, seed=1.5)

    def test_rejects_negative_burn_in(self):
        with self.assertRaises(ParameterError):
            ChaoticMapParams(family="logistic", control=3.9, seed=0.3, burn_in=-1)

    def test_warns_outside_chaotic_regime(self):
        with self.assertLogs("chaoskpa.core.chaos.chaos", level="WARNING"):
            ChaoticMapParams(family="logistic", control=3.5, seed=0.3)

    def test_family_coerced_from_string(self):
        self.assertIs(LOGISTIC.family, MapFamily.LOGISTIC)


class TestOrbit(unittest.TestCase):
    def test_first_values_without_burn_in(self):
        params = ChaoticMapParams(family="logistic", control=3.601, seed=0.1, burn_in=0)
        values = orbit(params, 2)
        self.assertAlmostEqual(values[0], 0.32409, places=12)
        self.assertAlmostEqual(values[1], 3.601 * 0.32409 * (1 - 0.32409), places=12)

    def test_burn_in_skips_transient(self):
        params = ChaoticMapParams(family="sine", control=0.95, seed=0.154, burn_in=0)
        full = orbit(params, 15)
        burned = orbit(ChaoticMapParams(family="sine", control=0.95, seed=0.154, burn_in=10), 5)
        self.assertEqual(full[10:], burned)

    def test_orbit_stays_in_range(self):
        for params in (LOGISTIC, SINE):
            values = np.array(orbit(params, 100_000))
            self.assertTrue(np.all((values > 0) & (values < 1)))
        values = np.array(orbit(CHEBYSHEV, 100_000))
        self.assertTrue(np.all((values >= -1) & (values <= 1)))

    def test_length_must_be_positive(self):
        with self.assertRaises(ParameterError):
            orbit(LOGISTIC, 0)


class TestKeystream(unittest.TestCase):
    def test_frozen_prefixes(self):
        for params, expected in [
            (LOGISTIC, [133, 84, 199, 165]),
            (SINE, [250, 68, 235, 204]),
            (CHEBYSHEV, [209, 231, 79, 216]),
        ]:
            with self.subTest(family=params.family.value):
                self.assertEqual(keystream(params, 4).bytes.tolist(), expected)

    def test_logistic_matches_plain_loop(self):
        expected = reference_bytes(lambda x: 3.601 * x * (1.0 - x), 0.1, 256)
        np.testing.assert_array_equal(keystream(LOGISTIC, 256).bytes, expected)

    def test_sine_matches_plain_loop(self):
        expected = reference_bytes(lambda x: 0.95 * math.sin(math.pi * x), 0.154, 256)
        np.testing.assert_array_equal(keystream(SINE, 256).bytes, expected)

    def test_chebyshev_matches_plain_loop(self):
        expected = reference_bytes(
            lambda x: math.cos(5.0 * math.acos(x)), 0.165, 256, shift=1.0, scale=2.0
        )
        np.testing.assert_array_equal(keystream(CHEBYSHEV, 256).bytes, expected)

    def test_deterministic(self):
        self.assertEqual(keystream(SINE, 1000), keystream(SINE, 1000))

    def test_prefix_property(self):
        np.testing.assert_array_equal(
            keystream(LOGISTIC, 100).bytes, keystream(LOGISTIC, 400).bytes[:100]
        )

    def test_zero_length_rejected(self):
        with self.assertRaises(ParameterError):
            keystream(LOGISTIC, 0)


@pytest.mark.parametrize("params", [LOGISTIC, SINE, CHEBYSHEV], ids=lambda p: p.family.value)
def test_byte_distribution_is_flat(params):
    length = 1_000_000
    counts = np.bincount(keystream(params, length).bytes, minlength=256)
    uniform = length / 256
    assert counts.min() > 0.75 * uniform
    assert counts.max() < 1.25 * uniform


@pytest.mark.parametrize("params", [LOGISTIC, SINE, CHEBYSHEV], ids=lambda p: p.family.value)
def test_seed_sensitivity(params):
    length = 100_000
    a = keystream(params, length).bytes
    b = keystream(params.with_seed(params.seed + 1e-10), length).bytes
    assert np.count_nonzero(a != b) > 0.99 * length
