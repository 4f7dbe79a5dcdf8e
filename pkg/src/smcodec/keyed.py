"""Counter-based keyed pseudo-random generator.

Every random object in the codec (the encryption permutation, the row
subset, the channel's loss pattern) is derived from a 64-bit seed through
the SplitMix64 output function evaluated on a counter::

    z_i = seed + (i + 1) * 0x9E3779B97F4A7C15          (mod 2**64)
    z_i = (z_i ^ (z_i >> 30)) * 0xBF58476D1CE4E5B9     (mod 2**64)
    z_i = (z_i ^ (z_i >> 27)) * 0x94D049BB133111EB     (mod 2**64)
    out_i = z_i ^ (z_i >> 31)

``out_0, out_1, ...`` is exactly the sequence produced by a SplitMix64
generator initialised with ``seed``.  Because each word depends only on
``(seed, i)`` the stream can be generated in bulk with numpy and is
identical on every platform.

Bounded integers use rejection sampling: to draw from ``[0, k)`` the next
word ``r`` is rejected while ``r < 2**64 mod k``, then ``r % k`` is returned.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a Python int."""
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def word(seed: int, counter: int) -> int:
    """The ``counter``-th 64-bit word of the stream keyed by ``seed``."""
    return mix64((seed + (counter + 1) * GOLDEN) & MASK64)


def words(seed: int, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` as a uint64 array."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + idx * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, count: int) -> np.ndarray:
    """``count`` doubles in [0, 1) from the top 53 bits of each word."""
    return (words(seed, 0, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


class KeyedStream:
    """Sequential reader over the keyed word stream."""

    def __init__(self, seed: int):
        self.seed = check_seed(seed)
        self.counter = 0

    def next_word(self) -> int:
        w = word(self.seed, self.counter)
        self.counter += 1
        return w

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)`` by rejection sampling."""
        if k < 1:
            raise ValueError("k must be positive")
        threshold = (1 << 64) % k
        while True:
            r = self.next_word()
            if r >= threshold:
                return r % k


def derive_seed(*parts: object) -> int:
    """Hash arbitrary coordinates to a 64-bit seed (BLAKE2b, first 8 bytes LE).

    Used to give every sweep cell and trial its own independent seeds.
    """
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        b = repr(p).encode()
        h.update(struct.pack("<I", len(b)))
        h.update(b)
    return struct.unpack("<Q", h.digest())[0]
