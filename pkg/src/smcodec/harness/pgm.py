"""Binary PGM (P5, maxval 255) reading and writing, plus the bundled test images."""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

import numpy as np

from ..cipher import ImageBuffer

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")

BUNDLED = ("lena", "barbara", "ascent", "kodim23")


class PGMError(ValueError):
    pass


def parse_pgm(data: bytes) -> ImageBuffer:
    if data[:2] != b"P5":
        kind = data[:2].decode("ascii", "replace")
        raise PGMError(f"only binary P5 graymaps are supported (got {kind!r})")
    pos = 2
    fields = []
    for _ in range(3):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise PGMError("truncated PGM header")
        try:
            fields.append(int(m.group(1)))
        except ValueError:
            raise PGMError(f"bad PGM header field {m.group(1)!r}") from None
        pos = m.end()
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PGMError("PGM dimensions must be positive")
    if maxval != 255:
        raise PGMError(f"maxval must be 255, got {maxval}")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PGMError("missing whitespace after PGM header")
    pos += 1
    n = width * height
    body = data[pos:pos + n]
    if len(body) != n:
        raise PGMError(f"truncated raster: expected {n} bytes, found {len(body)}")
    return ImageBuffer(width, height, np.frombuffer(body, dtype=np.uint8))


def load_pgm(path) -> ImageBuffer:
    return parse_pgm(Path(path).read_bytes())


def pgm_bytes(img: ImageBuffer) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.pixels.tobytes()


def save_pgm(img: ImageBuffer, path) -> None:
    Path(path).write_bytes(pgm_bytes(img))


def bundled_image(name: str) -> ImageBuffer:
    """One of :data:`BUNDLED` (512x512 grayscale)."""
    if name not in BUNDLED:
        raise KeyError(f"no bundled image {name!r}; choose from {', '.join(BUNDLED)}")
    ref = resources.files("smcodec").joinpath("data", f"{name}.pgm")
    return parse_pgm(ref.read_bytes())


def resolve_image(spec: str) -> ImageBuffer:
    """Path to a PGM file, or the name of a bundled image."""
    p = Path(spec)
    if p.is_file():
        return load_pgm(p)
    if spec in BUNDLED:
        return bundled_image(spec)
    raise FileNotFoundError(f"{spec}: no such file or bundled image")
