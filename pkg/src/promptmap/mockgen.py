"""Deterministic stand-in for a text-to-image backend.

Each image is a PNG of 8x8 color tiles drawn from a splitmix stream whose
seed is a stable 64-bit hash of (prompt, seed, image index). Re-running a
saved session therefore regenerates byte-identical blobs, which is what
makes offline persistence and replay tests possible.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from typing import TYPE_CHECKING

from . import _kernels

if TYPE_CHECKING:
    from .graph import GenParams

_PNG_SIG = b"\x89PNG\r\n\x1a\n"


def derive_seed(prompt: str, seed: int | None, index: int) -> int:
    """Stable 64-bit seed for image ``index`` of a generation request.

    Sub-seeding by index means changing image_count never shifts the
    images that were already generated.
    """
    msg = b"\x00".join([
        prompt.encode("utf-8"),
        (b"none" if seed is None else str(seed).encode("ascii")),
        str(index).encode("ascii"),
    ])
    return int.from_bytes(hashlib.blake2b(msg, digest_size=8).digest(), "big")


def content_hash(data: bytes) -> str:
    """64-bit hex digest used to content-address image blobs."""
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def _chunk(tag: bytes, body: bytes) -> bytes:
    crc = zlib.crc32(tag + body) & 0xFFFFFFFF
    return struct.pack(">I", len(body)) + tag + body + struct.pack(">I", crc)


def write_png(width: int, height: int, rgb: bytes) -> bytes:
    """Encode an RGB8 raster as a PNG (filter 0, fixed zlib level)."""
    if len(rgb) != width * height * 3:
        raise ValueError("raster size does not match dimensions")
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    stride = width * 3
    raw = b"".join(b"\x00" + rgb[y * stride:(y + 1) * stride] for y in range(height))
    idat = zlib.compress(raw, 6)
    return _PNG_SIG + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def png_dimensions(data: bytes) -> tuple[int, int]:
    """(width, height) from a PNG header; raises ValueError if not a PNG."""
    if len(data) < 24 or data[:8] != _PNG_SIG or data[12:16] != b"IHDR":
        raise ValueError("not a PNG")
    w, h = struct.unpack(">II", data[16:24])
    return w, h


def render_image(width: int, height: int, seed64: int) -> bytes:
    return write_png(width, height, _kernels.block_raster(width, height, seed64))


def mock_generate(prompt: str, params: "GenParams") -> list[bytes]:
    """Generate ``params.image_count`` deterministic PNG blobs."""
    return [
        render_image(params.width, params.height, derive_seed(prompt, params.seed, i))
        for i in range(params.image_count)
    ]
