"""Portable seeded randomness.

Every random draw in the package goes through :class:`SeededRng`, which reads
raw 64-bit words from numpy's Philox4x64-10 counter-based generator keyed
directly by ``(seed, stream)``.  Bounded integers are derived from those raw
words by rejection sampling implemented here, so the stream of values depends
only on the Philox algorithm and not on numpy's ``Generator`` method
implementations.
"""
from __future__ import annotations

import hashlib
from typing import MutableSequence, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

PRNG_ALGORITHM = "philox4x64-10/v1"

_U64 = 1 << 64
_MASK = _U64 - 1


def to_u64(value: int) -> int:
    """Map any Python integer (including negatives) onto ``[0, 2**64)``."""
    return int(value) & _MASK


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary printable parts (blake2b)."""
    text = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


class SeededRng:
    """Deterministic random source keyed by a 64-bit seed and a stream id."""

    def __init__(self, seed: int, stream: int = 0) -> None:
        self.seed = to_u64(seed)
        self.stream = to_u64(stream)
        self._bits = np.random.Philox(key=np.array([self.seed, self.stream], dtype=np.uint64))

    def next_u64(self) -> int:
        return int(self._bits.random_raw())

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        limit = _U64 - (_U64 % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise IndexError("choice from empty sequence")
        return seq[self.randbelow(len(seq))]

    def shuffle(self, seq: MutableSequence[T]) -> None:
        # Fisher-Yates, high index first
        for i in range(len(seq) - 1, 0, -1):
            j = self.randbelow(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        if not 0 <= k <= len(population):
            raise ValueError("sample larger than population")
        pool = list(population)
        out = []
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
            out.append(pool[i])
        return out
