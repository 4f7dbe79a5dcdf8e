"""Charlie's encoder: centring, structural sampling, 8-bit quantisation, packets.

Wire format (all integers little-endian)::

    StreamHeader, 43 bytes
      magic        4s   b"SMC1"
      version      u8   1
      transform_id u8   1 = block DCT, 2 = block Walsh-Hadamard
      block_size   u16
      width        u16
      height       u16
      M            u32  number of measurements
      packet_size  u16  measurements per packet
      d_seed       u64  subsampler seed (0 when withheld)
      rprime_seed  u64  full-redundancy permutation seed (0 if unused)
      mean_mu      f64  centring mean subtracted before sampling
      mode         u8   bits 0-1 sampling mode (0 standard, 1 full redundancy)
                        bit 5 subsampler seed withheld (secret keying)
                        bit 6 selected rows sorted ascending
                        bit 7 payload is raw float64 instead of 8-bit symbols

    Packet
      header       43 bytes, replicated in every packet
      index        u32
      discard_cnt  u16
      offsets      u16 * discard_cnt   in-packet offsets of discarded symbols
      payload      u8 * n (or f64 * n)  n = packet_size, or M - packet_size*(P-1)
                                         for the last of P packets

Version 1 measurements use orthonormal rows, ``y = D F (x_en - mu)``; row
vectorisation of the image is row-major.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from enum import Enum, IntFlag
from pathlib import Path

import numpy as np

from .cipher import ImageBuffer
from .keyed import check_seed
from .linops import (
    BlockTransformSpec,
    SubsampleSelector,
    TransformKind,
    block_transform_forward,
    make_permutation,
    make_subsampler,
    selector_from_rows,
)

MAGIC = b"SMC1"
VERSION = 1
HEADER_STRUCT = struct.Struct("<4sBBHHHIHQQdB")
HEADER_SIZE = HEADER_STRUCT.size
PACKET_PREFIX = struct.Struct("<IH")

QUANT_LOW = -127.5
QUANT_HIGH = 127.5
SYMBOL_OFFSET = 128

# Version 1 measurement gain: rows of D F are orthonormal.
MEASUREMENT_SCALE = 1.0


class FormatError(ValueError):
    """Malformed or inconsistent stream / packet bytes."""


class SamplingMode(Enum):
    STANDARD = 0
    FULL_REDUNDANCY = 1


class RowOrder(Enum):
    GENERATION = "generation"
    SORTED = "sorted"


class ModeFlags(IntFlag):
    SEED_WITHHELD = 0x20
    SORTED_ROWS = 0x40
    RAW_FLOAT = 0x80


def round_half_away(v: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(v) + 0.5), v)


def measurement_count(sr: float, n: int) -> int:
    """``M = round(sr * N)`` with halves rounded up."""
    return int(math.floor(sr * n + 0.5))


@dataclass(frozen=True)
class SamplingConfig:
    kind: TransformKind = TransformKind.BDCT
    block_size: int = 32
    sr: float = 0.6
    d_seed: int = 0
    packet_size: int = 100
    mode: SamplingMode = SamplingMode.STANDARD
    rprime_seed: int = 0
    row_order: RowOrder = RowOrder.SORTED
    publish_d_seed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", TransformKind.parse(self.kind))
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", SamplingMode[self.mode.upper()])
        if isinstance(self.row_order, str):
            object.__setattr__(self, "row_order", RowOrder(self.row_order))
        if not 0.0 < self.sr <= 1.0:
            raise ValueError(f"sampling rate must lie in (0, 1], got {self.sr}")
        if not 1 <= self.packet_size <= 0xFFFF:
            raise ValueError("packet size must be in [1, 65535]")
        check_seed(self.d_seed)
        check_seed(self.rprime_seed)

    def measurements_for(self, n: int) -> int:
        if self.mode is SamplingMode.FULL_REDUNDANCY:
            return n
        m = measurement_count(self.sr, n)
        if not 1 <= m <= n:
            raise ValueError(f"sampling rate {self.sr} gives M={m} outside [1, {n}]")
        return m


@dataclass(frozen=True)
class StreamHeader:
    transform_id: int
    block_size: int
    width: int
    height: int
    M: int
    packet_size: int
    d_seed: int
    rprime_seed: int
    mean_mu: float
    mode: int
    version: int = VERSION

    def __post_init__(self):
        if self.version != VERSION:
            raise FormatError(f"unsupported stream version {self.version}")
        try:
            TransformKind(self.transform_id)
        except ValueError:
            raise FormatError(f"unknown transform id {self.transform_id}") from None
        if self.mode & 0x03 not in (m.value for m in SamplingMode):
            raise FormatError(f"unknown sampling mode {self.mode & 0x03}")
        if self.mode & 0x1C:
            raise FormatError(f"reserved mode bits set: {self.mode:#04x}")
        n = self.width * self.height
        if n == 0 or self.block_size == 0 or n % self.block_size:
            raise FormatError("image size is not a positive multiple of the block size")
        if not 1 <= self.M <= n:
            raise FormatError(f"M={self.M} outside [1, {n}]")
        if self.packet_size < 1:
            raise FormatError("packet size must be positive")
        if self.sampling_mode is SamplingMode.FULL_REDUNDANCY and self.M != n:
            raise FormatError("full-redundancy streams carry exactly N measurements")
        if not math.isfinite(self.mean_mu):
            raise FormatError("centring mean is not finite")

    # -- derived quantities
    @property
    def n(self) -> int:
        return self.width * self.height

    @property
    def sampling_mode(self) -> SamplingMode:
        return SamplingMode(self.mode & 0x03)

    @property
    def raw(self) -> bool:
        return bool(self.mode & ModeFlags.RAW_FLOAT)

    @property
    def sorted_rows(self) -> bool:
        return bool(self.mode & ModeFlags.SORTED_ROWS)

    @property
    def seed_withheld(self) -> bool:
        return bool(self.mode & ModeFlags.SEED_WITHHELD)

    @property
    def transform(self) -> BlockTransformSpec:
        return BlockTransformSpec(TransformKind(self.transform_id), self.block_size, self.n)

    @property
    def packet_count(self) -> int:
        return -(-self.M // self.packet_size)

    @property
    def sr(self) -> float:
        return self.M / self.n

    def packet_length(self, index: int) -> int:
        P = self.packet_count
        if not 0 <= index < P:
            raise FormatError(f"packet index {index} outside [0, {P})")
        if index < P - 1:
            return self.packet_size
        return self.M - self.packet_size * (P - 1)

    # -- serialisation
    def to_bytes(self) -> bytes:
        return HEADER_STRUCT.pack(
            MAGIC, self.version, self.transform_id, self.block_size, self.width, self.height,
            self.M, self.packet_size, self.d_seed, self.rprime_seed, self.mean_mu, self.mode,
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "StreamHeader":
        if len(data) < HEADER_SIZE:
            raise FormatError(f"header needs {HEADER_SIZE} bytes, got {len(data)}")
        (magic, version, tid, B, w, h, M, m, d_seed, rp_seed, mu, mode) = HEADER_STRUCT.unpack_from(data)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        return cls(transform_id=tid, block_size=B, width=w, height=h, M=M, packet_size=m,
                   d_seed=d_seed, rprime_seed=rp_seed, mean_mu=mu, mode=mode, version=version)


def make_header(width: int, height: int, cfg: SamplingConfig, mean_mu: float,
                raw: bool = False) -> StreamHeader:
    n = width * height
    if width > 0xFFFF or height > 0xFFFF:
        raise ValueError("image dimensions exceed the 16-bit header fields")
    mode = cfg.mode.value
    if cfg.mode is SamplingMode.STANDARD:
        if cfg.row_order is RowOrder.SORTED:
            mode |= ModeFlags.SORTED_ROWS
        if not cfg.publish_d_seed:
            mode |= ModeFlags.SEED_WITHHELD
    if raw:
        mode |= ModeFlags.RAW_FLOAT
    standard = cfg.mode is SamplingMode.STANDARD
    return StreamHeader(
        transform_id=cfg.kind.value,
        block_size=cfg.block_size,
        width=width,
        height=height,
        M=cfg.measurements_for(n),
        packet_size=cfg.packet_size,
        d_seed=cfg.d_seed if standard and cfg.publish_d_seed else 0,
        rprime_seed=0 if standard else cfg.rprime_seed,
        mean_mu=float(mean_mu),
        mode=int(mode),
    )


def measurement_selector(header: StreamHeader, d_seed: int | None = None) -> SubsampleSelector:
    """Rows of ``F`` carried by measurements ``0..M-1``, in transmission order.

    For full-redundancy streams this is the permutation ``R'``; otherwise the
    seeded subsampler (``d_seed`` overrides the header in secret keying).
    """
    n = header.n
    if header.sampling_mode is SamplingMode.FULL_REDUNDANCY:
        return selector_from_rows(n, make_permutation(header.rprime_seed, n).forward, seed=header.rprime_seed)
    if header.seed_withheld and d_seed is None:
        raise ValueError("stream withholds its subsampler seed; the key must supply it")
    seed = header.d_seed if d_seed is None else d_seed
    sel = make_subsampler(seed, n, header.M)
    if header.sorted_rows:
        sel = selector_from_rows(n, np.sort(sel.rows), seed=seed)
    return sel


def _centred(cipher_img: ImageBuffer) -> tuple[np.ndarray, float]:
    x = cipher_img.pixels.astype(np.float64)
    mu = float(x.mean())
    return x - mu, mu


def _check_divisible(cipher_img: ImageBuffer, cfg: SamplingConfig):
    BlockTransformSpec(cfg.kind, cfg.block_size, cipher_img.n)


def sample(cipher_img: ImageBuffer, cfg: SamplingConfig, raw: bool = False) -> tuple[np.ndarray, StreamHeader]:
    """Measure the encrypted image: ``y = D F (x_en - mu)``.

    ``raw=True`` marks the header for unquantised float transport.
    """
    if cfg.mode is not SamplingMode.STANDARD:
        raise ValueError("sample() handles standard mode; use sample_full_redundancy()")
    _check_divisible(cipher_img, cfg)
    xc, mu = _centred(cipher_img)
    header = make_header(cipher_img.width, cipher_img.height, cfg, mu, raw=raw)
    sel = measurement_selector(header, d_seed=cfg.d_seed)
    coeffs = block_transform_forward(header.transform, xc)
    return MEASUREMENT_SCALE * coeffs[sel.rows], header


def sample_full_redundancy(cipher_img: ImageBuffer, cfg: SamplingConfig,
                           raw: bool = False) -> tuple[np.ndarray, StreamHeader]:
    """All ``N`` transform coefficients, reordered by the permutation ``R'``."""
    if cfg.mode is not SamplingMode.FULL_REDUNDANCY:
        raise ValueError("config is not in full-redundancy mode")
    _check_divisible(cipher_img, cfg)
    xc, mu = _centred(cipher_img)
    header = make_header(cipher_img.width, cipher_img.height, cfg, mu, raw=raw)
    sel = measurement_selector(header)
    return block_transform_forward(header.transform, xc)[sel.rows], header


def sample_any(cipher_img: ImageBuffer, cfg: SamplingConfig, raw: bool = False):
    if cfg.mode is SamplingMode.FULL_REDUNDANCY:
        return sample_full_redundancy(cipher_img, cfg, raw=raw)
    return sample(cipher_img, cfg, raw=raw)


# ---------------------------------------------------------------------------
# Quantisation


@dataclass
class QuantizedStream:
    """Symbols for measurements ``0..M-1``.

    ``symbols`` is uint8 (quantised) or float64 (raw header flag).  Entries
    listed in ``discarded`` or absent from ``present`` carry no information.
    """

    header: StreamHeader
    symbols: np.ndarray
    discarded: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    present: np.ndarray | None = None

    def __post_init__(self):
        dtype = np.float64 if self.header.raw else np.uint8
        self.symbols = np.asarray(self.symbols, dtype=dtype)
        self.discarded = np.asarray(self.discarded, dtype=np.int64)
        if self.symbols.shape != (self.header.M,):
            raise FormatError("symbol count does not match header M")
        d = self.discarded
        if d.size and (d[0] < 0 or d[-1] >= self.header.M or np.any(np.diff(d) <= 0)):
            raise FormatError("discard list must be strictly increasing indices below M")

    @property
    def gamma(self) -> float:
        """Fraction of (received) measurements dropped by the quantiser."""
        total = self.header.M if self.present is None else int(self.present.sum())
        return self.discarded.size / total if total else 0.0


def quantize(y, header: StreamHeader) -> QuantizedStream:
    """Keep values in [-127.5, 127.5), round half away from zero, shift by +128."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (header.M,):
        raise ValueError(f"expected {header.M} measurements, got {y.shape}")
    if header.raw:
        raise ValueError("header is flagged for raw transport; use raw_stream()")
    inside = (y >= QUANT_LOW) & (y < QUANT_HIGH)
    symbols = np.zeros(header.M, dtype=np.uint8)
    symbols[inside] = (round_half_away(y[inside]) + SYMBOL_OFFSET).astype(np.uint8)
    return QuantizedStream(header, symbols, np.nonzero(~inside)[0])


def raw_stream(y, header: StreamHeader) -> QuantizedStream:
    """Unquantised stream (float64 payloads), for the without-round-off path."""
    if not header.raw:
        raise ValueError("header is not flagged for raw transport")
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("measurements must be finite")
    return QuantizedStream(header, y)


def kept_indices(qs: QuantizedStream) -> np.ndarray:
    mask = np.ones(qs.header.M, dtype=bool) if qs.present is None else qs.present.copy()
    mask[qs.discarded] = False
    return np.nonzero(mask)[0]


def dequantize(qs: QuantizedStream) -> tuple[np.ndarray, np.ndarray]:
    """Measurement estimates and the indices they are valid at.

    The returned vector has length M; entries outside ``kept`` are zero.
    """
    if qs.present is not None and np.any(~qs.present[qs.discarded]):
        raise FormatError("discard list names measurements that were not received")
    kept = kept_indices(qs)
    values = np.zeros(qs.header.M, dtype=np.float64)
    if qs.header.raw:
        values[kept] = qs.symbols[kept]
    else:
        values[kept] = qs.symbols[kept].astype(np.float64) - SYMBOL_OFFSET
    return values, kept


# ---------------------------------------------------------------------------
# Packets


@dataclass(frozen=True)
class Packet:
    header: StreamHeader
    index: int
    discard_offsets: np.ndarray
    payload: np.ndarray

    def __post_init__(self):
        n = self.header.packet_length(self.index)
        dtype = np.float64 if self.header.raw else np.uint8
        payload = np.asarray(self.payload, dtype=dtype)
        if payload.shape != (n,):
            raise FormatError(f"packet {self.index} must carry {n} symbols, got {payload.shape}")
        offs = np.asarray(self.discard_offsets, dtype=np.int64)
        if offs.size > 0xFFFF:
            raise FormatError("too many discards for one packet")
        if offs.size and (offs[0] < 0 or offs[-1] >= n or np.any(np.diff(offs) <= 0)):
            raise FormatError("discard offsets must be strictly increasing and inside the packet")
        object.__setattr__(self, "payload", payload)
        object.__setattr__(self, "discard_offsets", offs)

    @property
    def start(self) -> int:
        return self.index * self.header.packet_size

    def to_bytes(self) -> bytes:
        payload = self.payload.astype("<f8") if self.header.raw else self.payload
        return b"".join((
            self.header.to_bytes(),
            PACKET_PREFIX.pack(self.index, self.discard_offsets.size),
            self.discard_offsets.astype("<u2").tobytes(),
            payload.tobytes(),
        ))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Packet":
        header = StreamHeader.from_bytes(data)
        pos = HEADER_SIZE
        if len(data) < pos + PACKET_PREFIX.size:
            raise FormatError("truncated packet prefix")
        index, count = PACKET_PREFIX.unpack_from(data, pos)
        pos += PACKET_PREFIX.size
        n = header.packet_length(index)
        width = 8 if header.raw else 1
        expected = pos + 2 * count + width * n
        if len(data) != expected:
            raise FormatError(f"packet {index} is {len(data)} bytes, expected {expected}")
        offs = np.frombuffer(data, dtype="<u2", count=count, offset=pos).astype(np.int64)
        pos += 2 * count
        dtype = "<f8" if header.raw else np.uint8
        payload = np.frombuffer(data, dtype=dtype, count=n, offset=pos)
        return cls(header, index, offs, payload.astype(np.float64 if header.raw else np.uint8))


def packetize(qs: QuantizedStream) -> list[Packet]:
    """Split into ``ceil(M / m)`` consecutive packets with the header replicated."""
    h = qs.header
    m = h.packet_size
    packets = []
    for i in range(h.packet_count):
        lo = i * m
        hi = min(lo + m, h.M)
        sel = (qs.discarded >= lo) & (qs.discarded < hi)
        packets.append(Packet(h, i, qs.discarded[sel] - lo, qs.symbols[lo:hi]))
    return packets


def depacketize(packets) -> tuple[QuantizedStream, np.ndarray]:
    """Reassemble received packets; returns the gapped stream and received indices."""
    packets = list(packets)
    if not packets:
        raise ValueError("no packets received")
    h = packets[0].header
    dtype = np.float64 if h.raw else np.uint8
    symbols = np.zeros(h.M, dtype=dtype)
    present = np.zeros(h.M, dtype=bool)
    discards = []
    seen = set()
    for p in packets:
        if p.header != h:
            raise FormatError(f"packet {p.index} header differs from packet {packets[0].index}")
        if p.index in seen:
            raise FormatError(f"duplicate packet index {p.index}")
        seen.add(p.index)
        lo = p.start
        symbols[lo:lo + p.payload.size] = p.payload
        present[lo:lo + p.payload.size] = True
        discards.append(p.discard_offsets + lo)
    discarded = np.sort(np.concatenate(discards)) if discards else np.zeros(0, dtype=np.int64)
    qs = QuantizedStream(h, symbols, discarded, present=None if present.all() else present)
    return qs, np.nonzero(present)[0]


def effective_rates(M: int, m: int, beta: float) -> tuple[float, float]:
    """Predicted SR multiplier and PLR after last-packet and rounding effects.

    With ``P = ceil(M/m)`` packets, ``L = round(P * beta)`` of them lost and the
    short last packet (``m' = M - m (P - 1)`` symbols) assumed received, the
    received fraction of measurements is ``(m (P - L - 1) + m') / M`` and the
    realised loss rate is ``L / P``.
    """
    if M < 1 or m < 1:
        raise ValueError("M and m must be positive")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    P = -(-M // m)
    last = M - m * (P - 1)
    lost = int(math.floor(P * beta + 0.5))
    if lost >= P:
        return 0.0, 1.0
    return (m * (P - lost - 1) + last) / M, lost / P


# ---------------------------------------------------------------------------
# Convenience and packet files


def encode(cipher_img: ImageBuffer, cfg: SamplingConfig, quantized: bool = True) -> list[Packet]:
    y, header = sample_any(cipher_img, cfg, raw=not quantized)
    qs = quantize(y, header) if quantized else raw_stream(y, header)
    return packetize(qs)


def write_packets(path, packets) -> None:
    """Length-prefixed (u32 LE) concatenation of serialised packets."""
    with open(Path(path), "wb") as fh:
        for p in packets:
            b = p.to_bytes()
            fh.write(struct.pack("<I", len(b)))
            fh.write(b)


def read_packets(path) -> list[Packet]:
    data = Path(path).read_bytes()
    pos = 0
    out = []
    while pos < len(data):
        if pos + 4 > len(data):
            raise FormatError("truncated packet length prefix")
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + n > len(data):
            raise FormatError("truncated packet body")
        out.append(Packet.from_bytes(data[pos:pos + n]))
        pos += n
    return out
