"""Counter-based random streams.

A stream is a Philox generator keyed by a 64-bit seed.  Child streams for a
given purpose ("gate-noise", "perturb/gaussian:0.1", ...) get their key by
mixing the parent seed with a CRC of the purpose string through
:class:`numpy.random.SeedSequence`, so streams for different purposes never
share a key.
"""
from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def mix_seed(seed: int, *words) -> int:
    """Derive a 64-bit seed from ``seed`` and any mix of ints/strings."""
    entropy = [int(seed) & _MASK64]
    for w in words:
        entropy.append(zlib.crc32(w.encode("utf-8")) if isinstance(w, str) else int(w) & _MASK64)
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


class RngStream:
    """Reproducible random stream identified by ``(seed, counter)``."""

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK64
        self.counter = int(counter)
        key = np.random.SeedSequence(self.seed).generate_state(2, np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key, counter=self.counter))

    def derive(self, *purpose) -> "RngStream":
        return RngStream(mix_seed(self.seed, *purpose))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None) -> np.ndarray:
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size)

    def random(self, size=None) -> np.ndarray:
        return self._gen.random(size)

    def permutation(self, n) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, counter={self.counter})"
