"""Seeded linear operators: permutation, block orthonormal transforms, row subsampling.

Composed they give the structurally random matrix ``scale * D F R`` and, without
``R``, the structural matrix ``scale * D F`` applied to an already permuted image.
All operators are immutable; index arrays are stored read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import fft as sfft

from ._backend import kernels
from .keyed import check_seed


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _vector(x, n: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise ValueError(f"{what}: expected a vector of length {n}, got shape {x.shape}")
    return x


# ---------------------------------------------------------------------------
# Permutation R


@dataclass(frozen=True)
class PermutationMap:
    """Bijection on ``0..n-1``; ``apply`` gathers ``out[i] = x[forward[i]]``."""

    n: int
    forward: np.ndarray
    seed: int

    def inverse_indices(self) -> np.ndarray:
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.forward] = np.arange(self.n, dtype=np.int64)
        return inv


def make_permutation(seed: int, n: int) -> PermutationMap:
    """Fisher-Yates shuffle of ``0..n-1`` driven by the keyed stream of ``seed``."""
    seed = check_seed(seed)
    if n < 1:
        raise ValueError("permutation length must be >= 1")
    return PermutationMap(n=int(n), forward=_frozen(kernels.fisher_yates(seed, int(n))), seed=seed)


def identity_permutation(n: int) -> PermutationMap:
    return PermutationMap(n=int(n), forward=_frozen(np.arange(n, dtype=np.int64)), seed=0)


def apply_permutation(p: PermutationMap, x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != p.n:
        raise ValueError(f"permutation of length {p.n} applied to shape {x.shape}")
    return x[p.forward]


def apply_inverse_permutation(p: PermutationMap, x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != p.n:
        raise ValueError(f"permutation of length {p.n} applied to shape {x.shape}")
    out = np.empty_like(x)
    out[p.forward] = x
    return out


# ---------------------------------------------------------------------------
# Block-diagonal orthonormal transform F


class TransformKind(Enum):
    BDCT = 1
    BWHT = 2

    @classmethod
    def parse(cls, value) -> "TransformKind":
        if isinstance(value, cls):
            return value
        if isinstance(value, int):
            return cls(value)
        return cls[str(value).upper()]


@dataclass(frozen=True)
class BlockTransformSpec:
    """``n``-point operator made of ``n / block_size`` identical orthonormal blocks.

    Blocks are contiguous runs of the (vectorised) signal.
    """

    kind: TransformKind
    block_size: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", TransformKind.parse(self.kind))
        B, n = int(self.block_size), int(self.n)
        if B < 1 or n < 1:
            raise ValueError("block size and length must be positive")
        if n % B:
            raise ValueError(f"length {n} is not a multiple of block size {B}")
        if self.kind is TransformKind.BWHT and B & (B - 1):
            raise ValueError(f"Walsh-Hadamard block size must be a power of two, got {B}")


def _blocks(spec: BlockTransformSpec, x) -> np.ndarray:
    x = _vector(x, spec.n, "block transform")
    return x.reshape(-1, spec.block_size)


def block_transform_forward(spec: BlockTransformSpec, x) -> np.ndarray:
    """Orthonormal DCT-II or natural-order Walsh-Hadamard on each block."""
    blocks = _blocks(spec, x)
    if spec.kind is TransformKind.BDCT:
        return sfft.dct(blocks, type=2, norm="ortho", axis=1).reshape(-1)
    out = np.array(blocks, dtype=np.float64, order="C")
    kernels.fwht_blocks(out)
    out *= 1.0 / math.sqrt(spec.block_size)
    return out.reshape(-1)


def block_transform_adjoint(spec: BlockTransformSpec, y) -> np.ndarray:
    """Transpose (= inverse) of :func:`block_transform_forward`."""
    blocks = _blocks(spec, y)
    if spec.kind is TransformKind.BDCT:
        return sfft.idct(blocks, type=2, norm="ortho", axis=1).reshape(-1)
    # the normalised Hadamard matrix is symmetric
    return block_transform_forward(spec, y)


def dense_block_matrix(kind, B: int) -> np.ndarray:
    """The ``B x B`` block written out from its definition (test and debugging aid)."""
    kind = TransformKind.parse(kind)
    k = np.arange(B)[:, None]
    i = np.arange(B)[None, :]
    if kind is TransformKind.BDCT:
        m = np.cos(np.pi * (2 * i + 1) * k / (2 * B)) * math.sqrt(2.0 / B)
        m[0] /= math.sqrt(2.0)
        return m
    bits = np.bitwise_and(k, i)
    parity = np.array([[bin(v).count("1") & 1 for v in row] for row in bits])
    return (1.0 - 2.0 * parity) / math.sqrt(B)


# ---------------------------------------------------------------------------
# Row subsampler D


@dataclass(frozen=True)
class SubsampleSelector:
    """``m`` distinct rows of ``0..n-1`` kept in generation order."""

    n: int
    m: int
    rows: np.ndarray
    seed: int

    def restrict(self, positions) -> "SubsampleSelector":
        """Selector keeping only ``rows[positions]`` (e.g. the received measurements)."""
        rows = self.rows[np.asarray(positions, dtype=np.int64)]
        return SubsampleSelector(n=self.n, m=int(rows.shape[0]), rows=_frozen(rows), seed=self.seed)


def make_subsampler(seed: int, n: int, m: int) -> SubsampleSelector:
    """First ``m`` slots of a partial Fisher-Yates shuffle over ``0..n-1``."""
    seed = check_seed(seed)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    rows = kernels.partial_fisher_yates(seed, int(n), int(m))
    return SubsampleSelector(n=int(n), m=int(m), rows=_frozen(rows), seed=seed)


def selector_from_rows(n: int, rows, seed: int = 0) -> SubsampleSelector:
    rows = np.asarray(rows, dtype=np.int64)
    if rows.ndim != 1 or rows.size < 1:
        raise ValueError("rows must be a non-empty vector")
    if rows.min() < 0 or rows.max() >= n or np.unique(rows).size != rows.size:
        raise ValueError("rows must be distinct indices in [0, n)")
    return SubsampleSelector(n=int(n), m=int(rows.size), rows=_frozen(rows), seed=seed)


def subsample(sel: SubsampleSelector, x, scale: float = 1.0) -> np.ndarray:
    x = _vector(x, sel.n, "subsample")
    return scale * x[sel.rows]


def subsample_adjoint(sel: SubsampleSelector, y, scale: float = 1.0) -> np.ndarray:
    y = _vector(y, sel.m, "subsample adjoint")
    out = np.zeros(sel.n, dtype=np.float64)
    out[sel.rows] = scale * y
    return out


# ---------------------------------------------------------------------------
# Composition scale * D F R


@dataclass(frozen=True)
class ScaledOperator:
    """``scale * D F R``; ``permutation=None`` gives the structural matrix ``scale * D F``."""

    transform: BlockTransformSpec
    selector: SubsampleSelector
    scale: float
    permutation: PermutationMap | None = None

    def __post_init__(self):
        n = self.transform.n
        if self.selector.n != n or (self.permutation is not None and self.permutation.n != n):
            raise ValueError("operator stages have inconsistent dimensions")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.selector.m, self.transform.n)

    def apply(self, x) -> np.ndarray:
        return srm_apply(self, x)

    def adjoint(self, y) -> np.ndarray:
        return srm_adjoint(self, y)


def srm_operator(transform: BlockTransformSpec, selector: SubsampleSelector,
                 permutation: PermutationMap | None = None, scale: float | None = None) -> ScaledOperator:
    """Build the operator; ``scale`` defaults to ``sqrt(N / M)``."""
    if scale is None:
        scale = math.sqrt(transform.n / selector.m)
    return ScaledOperator(transform=transform, selector=selector, scale=float(scale), permutation=permutation)


def srm_apply(op: ScaledOperator, x) -> np.ndarray:
    x = _vector(x, op.transform.n, "operator")
    if op.permutation is not None:
        x = apply_permutation(op.permutation, x)
    return subsample(op.selector, block_transform_forward(op.transform, x), op.scale)


def srm_adjoint(op: ScaledOperator, y) -> np.ndarray:
    z = block_transform_adjoint(op.transform, subsample_adjoint(op.selector, y, op.scale))
    if op.permutation is not None:
        z = apply_inverse_permutation(op.permutation, z)
    return z
