"""
Deterministic random streams for the samplers.

Each chain owns one RandomStream. Streams are built on numpy's PCG64 bit
generator seeded through SeedSequence, so sibling streams derived from
(seed, chain index) are statistically independent and the whole output
sequence replays bit-exactly from the seed.

The module exposes the three primitives the walk needs:
- uniform01: a variate in (0, 1], so log(xi) is always finite
- gaussian_vector / unit_direction: isotropic directions d = g / |g|
- trajectory_length: exponential length l = -tau * log(xi)
"""

import logging
from typing import List, Optional

import numpy as np

from bwalk.core.exceptions import InvalidConfigError, InvalidDimensionError

logger = logging.getLogger(__name__)

GENERATOR_NAME = "numpy.random.PCG64"
_SEED_LIMIT = 2 ** 64


class RandomStream:
    """
    Single-owner random stream.

    Parameters
    ----------
    seed : int
        64-bit non-negative seed.
    chain_index : int | None
        When given, the stream is the chain_index-th sibling of the seed.
    """

    def __init__(self, seed: int, chain_index: Optional[int] = None):
        if not 0 <= int(seed) < _SEED_LIMIT:
            raise InvalidConfigError(f"seed must be a 64-bit non-negative integer, got {seed}")
        self.seed = int(seed)
        self.chain_index = chain_index
        spawn_key = () if chain_index is None else (int(chain_index),)
        self._sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(self._sequence))

    @property
    def identity(self) -> dict:
        """Provenance record stored in run reports"""
        return {
            "generator": GENERATOR_NAME,
            "seed": self.seed,
            "chain_index": self.chain_index,
        }

    def child(self, chain_index: int) -> "RandomStream":
        """Independent sibling stream for another chain of the same seed"""
        return RandomStream(self.seed, chain_index=chain_index)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, chain_index={self.chain_index})"


def sibling_streams(seed: int, count: int) -> List[RandomStream]:
    """Streams for `count` independent chains sharing one seed"""
    if count < 0:
        raise InvalidConfigError("stream count must be non-negative")
    return [RandomStream(seed, chain_index=i) for i in range(count)]


def uniform01(stream: RandomStream) -> float:
    """Uniform variate on (0, 1]"""
    # Generator.random() is on [0, 1); reflecting it excludes 0 and admits 1.
    return 1.0 - stream.generator.random()


def gaussian_vector(stream: RandomStream, n: int) -> np.ndarray:
    """n independent standard normal components"""
    if n < 1:
        raise InvalidDimensionError(f"gaussian_vector needs n >= 1, got {n}")
    return stream.generator.standard_normal(n)


def unit_direction(stream: RandomStream, n: int) -> np.ndarray:
    """Direction uniformly distributed on the unit sphere in R^n"""
    if n < 2:
        raise InvalidDimensionError(f"unit_direction needs n >= 2, got {n}")
    while True:
        g = gaussian_vector(stream, n)
        norm = np.linalg.norm(g)
        if norm > 0.0:
            return g / norm
        logger.debug("Degenerate zero Gaussian draw, redrawing direction")


def trajectory_length(stream: RandomStream, tau: float) -> float:
    """Exponential trajectory length with mean tau"""
    if not tau > 0.0:
        raise InvalidConfigError(f"tau must be positive, got {tau}")
    return -tau * float(np.log(uniform01(stream)))


def uniform_interval(stream: RandomStream, low: float, high: float) -> float:
    """Uniform point on (low, high); used by Hit-and-Run chord picks"""
    u = stream.generator.random()
    while u == 0.0:
        u = stream.generator.random()
    return low + (high - low) * u


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic 63-bit seed for a labelled sub-experiment of `seed`"""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(sequence.generate_state(1, np.uint64)[0] >> np.uint64(1))
