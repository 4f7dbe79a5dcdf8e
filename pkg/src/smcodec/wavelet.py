"""Separable multilevel CDF 9/7 wavelet transform (lifting, symmetric extension).

Coefficient layout is the usual in-place pyramid: at every level the current
approximation region ``[:h, :w]`` is transformed along rows then columns, with
low-pass outputs first on each axis, so the coarsest approximation ends up in
the top-left corner.  Coefficients are flattened row-major.

Lifting scaling makes the low-pass DC gain ``sqrt(2)`` per axis, so the
transform is close to (but not exactly) orthonormal.  ``synthesis_adjoint``
provides the exact transpose of the synthesis operator needed by solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels


@dataclass(frozen=True)
class WaveletGeometry:
    width: int
    height: int
    levels: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if self.levels < 1:
            raise ValueError("need at least one decomposition level")
        f = 1 << self.levels
        if self.width % f or self.height % f:
            raise ValueError(
                f"{self.width}x{self.height} is not divisible by 2**{self.levels}"
            )

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


def default_levels(width: int, height: int) -> int:
    """``log2(min(width, height)) - 3``, at least 1 (6 levels for 512x512)."""
    m = min(width, height)
    levels = max(int(np.floor(np.log2(m))) - 3, 1)
    while levels > 1 and (width % (1 << levels) or height % (1 << levels)):
        levels -= 1
    return levels


def geometry_for(width: int, height: int, levels: int | None = None) -> WaveletGeometry:
    return WaveletGeometry(width, height, default_levels(width, height) if levels is None else levels)


@dataclass(frozen=True)
class CoeffVector:
    values: np.ndarray
    geometry: WaveletGeometry

    def __post_init__(self):
        if self.values.shape != (self.geometry.size,):
            raise ValueError("coefficient vector does not match its geometry")

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.geometry.shape)


def _rows(fn, a: np.ndarray) -> np.ndarray:
    return fn(np.ascontiguousarray(a))


def _cols(fn, a: np.ndarray) -> np.ndarray:
    return fn(np.ascontiguousarray(a.T)).T


def _as_image(x, geometry: WaveletGeometry) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1 and a.size == geometry.size:
        a = a.reshape(geometry.shape)
    if a.shape != geometry.shape:
        raise ValueError(f"expected an image of shape {geometry.shape}, got {a.shape}")
    return a


def dwt2_forward(image, geometry: WaveletGeometry) -> CoeffVector:
    """Analysis transform of a ``height x width`` array."""
    out = np.array(_as_image(image, geometry), dtype=np.float64)
    h, w = geometry.shape
    for _ in range(geometry.levels):
        region = out[:h, :w]
        region = _rows(kernels.lift_analysis_rows, region)
        out[:h, :w] = _cols(kernels.lift_analysis_rows, region)
        h //= 2
        w //= 2
    return CoeffVector(out.reshape(-1), geometry)


def dwt2_inverse(c: CoeffVector) -> np.ndarray:
    """Synthesis transform; exact inverse of :func:`dwt2_forward`."""
    g = c.geometry
    out = np.array(c.values, dtype=np.float64).reshape(g.shape)
    for lev in range(g.levels - 1, -1, -1):
        h, w = g.height >> lev, g.width >> lev
        region = _cols(kernels.lift_synthesis_rows, out[:h, :w])
        out[:h, :w] = _rows(kernels.lift_synthesis_rows, region)
    return out


def synthesis_adjoint(image, geometry: WaveletGeometry) -> CoeffVector:
    """Transpose of :func:`dwt2_inverse` viewed as a linear map on flat vectors."""
    out = np.array(_as_image(image, geometry), dtype=np.float64)
    h, w = geometry.shape
    for _ in range(geometry.levels):
        region = _rows(kernels.lift_synthesis_adjoint_rows, out[:h, :w])
        out[:h, :w] = _cols(kernels.lift_synthesis_adjoint_rows, region)
        h //= 2
        w //= 2
    return CoeffVector(out.reshape(-1), geometry)
