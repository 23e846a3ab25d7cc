"""Seedable random streams shared by every random draw in the package.

All streams use numpy's Philox4x64-10 counter-based generator, keyed through
``SeedSequence`` so that the same seed gives the same stream on every platform.
Independent sub-streams are derived by name with :meth:`Rng.child`.
"""

from __future__ import annotations

import zlib

import numpy as np

ALGORITHM = "philox4x64-10"
MAX_SEED = 2**64 - 1


class Rng:
    """A named, reproducible random stream."""

    algorithm = ALGORITHM

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed <= MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.generator = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))

    def child(self, tag: str) -> Rng:
        """Independent stream keyed by (seed, tag); does not consume from ``self``."""
        seq = np.random.SeedSequence([self.seed & 0xFFFFFFFF, self.seed >> 32, zlib.crc32(tag.encode())])
        return Rng(int(seq.generate_state(1, np.uint64)[0]))

    def words(self, n: int) -> np.ndarray:
        """``n`` uniformly random 64-bit words."""
        return self.generator.bit_generator.random_raw(n).astype(np.uint64)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, algorithm={self.algorithm!r})"
