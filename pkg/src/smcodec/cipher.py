"""Permutation encryption of 8-bit images and key-space accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .keyed import check_seed
from .linops import PermutationMap, apply_inverse_permutation, apply_permutation, make_permutation


class KeyMode(Enum):
    """Who holds which seed.

    STANDARD: Alice permutes, Charlie's subsampler seed is public.
    SECRET_SUBSAMPLER: the subsampler seed is also secret (shared Charlie/Bob).
    FULL_DFR: Alice applies the whole sampling chain herself with her own seeds.
    """

    STANDARD = 0
    SECRET_SUBSAMPLER = 1
    FULL_DFR = 2


@dataclass(frozen=True)
class CipherKey:
    r_seed: int
    mode: KeyMode = KeyMode.STANDARD
    d_seed: int | None = None

    def __post_init__(self):
        check_seed(self.r_seed)
        if self.mode is KeyMode.STANDARD:
            if self.d_seed is not None:
                raise ValueError("standard keying keeps the subsampler seed public; d_seed must be None")
        else:
            if self.d_seed is None:
                raise ValueError(f"{self.mode.name} keying requires a secret d_seed")
            check_seed(self.d_seed)


@dataclass(frozen=True)
class ImageBuffer:
    """Row-major 8-bit grayscale image."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8).reshape(-1)
        if px.size != self.width * self.height:
            raise ValueError(
                f"{px.size} pixels do not fill a {self.width}x{self.height} image"
            )
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, a) -> "ImageBuffer":
        a = np.asarray(a)
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        if a.dtype != np.uint8:
            if a.min() < 0 or a.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            a = a.astype(np.uint8)
        return cls(width=a.shape[1], height=a.shape[0], pixels=a)

    @property
    def n(self) -> int:
        return self.width * self.height

    def as_array(self) -> np.ndarray:
        return self.pixels.reshape(self.height, self.width)


def key_permutation(key: CipherKey, n: int) -> PermutationMap:
    return make_permutation(key.r_seed, n)


def encrypt(img: ImageBuffer, key: CipherKey) -> ImageBuffer:
    """Globally permute the row-major pixel vector with the key's permutation."""
    perm = key_permutation(key, img.n)
    return ImageBuffer(img.width, img.height, apply_permutation(perm, img.pixels))


def decrypt(img: ImageBuffer, key: CipherKey) -> ImageBuffer:
    perm = key_permutation(key, img.n)
    return ImageBuffer(img.width, img.height, apply_inverse_permutation(perm, img.pixels))


def key_space_bits(n: int, m: int | None = None) -> float:
    """``log2(n!)``, or ``log2(n! + C(n, m))`` when a secret ``m``-row subset is added."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ln_fact = math.lgamma(n + 1)
    if m is None:
        return ln_fact / math.log(2)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}")
    ln_binom = ln_fact - math.lgamma(m + 1) - math.lgamma(n - m + 1)
    hi, lo = max(ln_fact, ln_binom), min(ln_fact, ln_binom)
    return (hi + math.log1p(math.exp(lo - hi))) / math.log(2)
