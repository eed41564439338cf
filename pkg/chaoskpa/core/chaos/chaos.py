"""
One-dimensional chaotic maps and the keystreams derived from their orbits.

All arithmetic is binary64 (Python floats) in the literal operation order of
each recurrence, so a keystream is reproducible bit for bit from its params.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from ..utils.errors import ParameterError

logger = logging.getLogger(__name__)

LOGISTIC_CHAOS_ONSET = 3.5699456
QUANTIZATION_SCALE = 1e14
DEFAULT_BURN_IN = 1000


class MapFamily(str, Enum):
    LOGISTIC = "logistic"
    SINE = "sine"
    CHEBYSHEV = "chebyshev"


@dataclass(kw_only=True, frozen=True)
class ChaoticMapParams:
    """Key material for one chaotic map: family, control parameter, seed and burn-in."""

    family: MapFamily
    control: float
    seed: float
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        object.__setattr__(self, "family", MapFamily(self.family))
        object.__setattr__(self, "control", float(self.control))
        object.__setattr__(self, "seed", float(self.seed))

        if isinstance(self.burn_in, bool) or int(self.burn_in) != self.burn_in:
            raise ParameterError(f"burn_in must be an integer, got {self.burn_in!r}")
        if self.burn_in < 0:
            raise ParameterError(f"burn_in must be >= 0, got {self.burn_in}")

        _check_control(self.family, self.control)
        if self.family is MapFamily.CHEBYSHEV:
            if not -1.0 <= self.seed <= 1.0:
                raise ParameterError(
                    f"Chebyshev seed must lie in [-1, 1], got {self.seed}"
                )
        elif not 0.0 < self.seed < 1.0:
            raise ParameterError(
                f"{self.family.value.capitalize()} seed must lie in (0, 1), got {self.seed}"
            )

        if (
            self.family is MapFamily.LOGISTIC
            and self.control <= LOGISTIC_CHAOS_ONSET
        ):
            logger.warning(
                "Logistic control %s is outside the chaotic regime (%s, 4]",
                self.control,
                LOGISTIC_CHAOS_ONSET,
            )

    def with_seed(self, seed):
        return ChaoticMapParams(
            family=self.family, control=self.control, seed=seed, burn_in=self.burn_in
        )

    def as_dict(self):
        return {
            "family": self.family.value,
            "control": self.control,
            "seed": self.seed,
            "burn_in": self.burn_in,
        }


@dataclass(frozen=True, eq=False)
class Keystream:
    bytes: np.ndarray
    params: ChaoticMapParams

    @property
    def length(self):
        return int(self.bytes.size)

    def __len__(self):
        return self.length

    def __eq__(self, other):
        if not isinstance(other, Keystream):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.bytes, other.bytes)


def _check_control(family, control):
    if family is MapFamily.LOGISTIC and not 0.0 <= control <= 4.0:
        raise ParameterError(f"Logistic control must lie in [0, 4], got {control}")
    if family is MapFamily.SINE and not 0.0 < control <= 1.0:
        raise ParameterError(f"Sine control must lie in (0, 1], got {control}")
    if family is MapFamily.CHEBYSHEV and not control > 1.0:
        raise ParameterError(f"Chebyshev control must be > 1, got {control}")


def _check_state(family, x):
    if family is MapFamily.CHEBYSHEV:
        if not -1.0 <= x <= 1.0:
            raise ParameterError(f"Chebyshev state must lie in [-1, 1], got {x}")
    elif not 0.0 <= x <= 1.0:
        raise ParameterError(
            f"{family.value.capitalize()} state must lie in [0, 1], got {x}"
        )


def map_step(params, x):
    """
    Returns X_{n+1} for the family's recurrence:

    Logistic:  mu * x * (1 - x)
    Sine:      sigma * sin(pi * x)
    Chebyshev: cos(theta * arccos(x))
    """
    x = float(x)
    _check_state(params.family, x)
    return _step_fn(params)(x)


def _step_fn(params):
    control = params.control
    if params.family is MapFamily.LOGISTIC:
        return lambda x: control * x * (1.0 - x)
    if params.family is MapFamily.SINE:
        return lambda x: control * math.sin(math.pi * x)
    return lambda x: math.cos(control * math.acos(x))


def orbit(params, n):
    """
    Returns X_{burn_in+1} ... X_{burn_in+n}. The first burn_in iterates from the
    seed are computed and discarded.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ParameterError(f"orbit length must be a positive integer, got {n!r}")
    n = int(n)

    step = _step_fn(params)
    x = params.seed
    for _ in range(params.burn_in):
        x = step(x)

    values = [0.0] * n
    for i in range(n):
        x = step(x)
        values[i] = x

    # Iterates never leave the family's range from a valid seed; a violation
    # here means the params escaped validation.
    _check_state(params.family, x)
    return values


def normalize(family, x):
    if family is MapFamily.CHEBYSHEV:
        return (x + 1.0) / 2.0
    return x


def quantize(family, x):
    return math.floor(normalize(family, x) * QUANTIZATION_SCALE) % 256


def keystream(params, length):
    """Derives `length` key bytes from the orbit: floor(normalize(X_i) * 1e14) mod 256."""
    if isinstance(length, bool) or int(length) != length or length < 1:
        raise ParameterError(
            f"keystream length must be a positive integer, got {length!r}"
        )
    return Keystream(bytes=_keystream_bytes(params, int(length)), params=params)


@lru_cache(maxsize=64)
def _keystream_bytes(params, length):
    family = params.family
    data = np.fromiter(
        (quantize(family, x) for x in orbit(params, length)),
        dtype=np.uint8,
        count=length,
    )
    data.setflags(write=False)
    logger.debug("Generated %d keystream bytes for %s", length, params)
    return data
