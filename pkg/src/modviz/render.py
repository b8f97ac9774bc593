"""Grid rendering and PNG output.

Rows are processed in fixed bands of :data:`BAND_ROWS`. The banding does not
depend on the worker count, and each band writes a disjoint slice of the
output, so the result is bit-identical for any number of workers.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .coloring import MagnitudeGrey, PhaseMag, SchemeSpec
from .errors import IoError, SizeError
from .forms import DomainSpec, FourierSeries, eval_series_array, sample_domain

BAND_ROWS = 32
MAX_SIDE = 20000
PNG_COMPRESSION = 6
WHITE = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class RenderJob:
    form: FourierSeries
    domain: DomainSpec
    scheme: SchemeSpec = field(default_factory=MagnitudeGrey)
    width: int = 600
    height: int = 600
    masked_color: tuple = WHITE

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError("width and height must be >= 1")
        color = tuple(float(c) for c in self.masked_color)
        if len(color) != 3 or not all(0.0 <= c <= 1.0 for c in color):
            raise ValueError(f"masked_color must be an RGB triple in [0, 1]: {self.masked_color}")
        object.__setattr__(self, "masked_color", color)


@dataclass(eq=False)
class PixelBuffer:
    """``pixels`` is (height, width, 3) float RGB; ``mask`` is (height, width)."""

    width: int
    height: int
    pixels: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError(f"pixels shape {self.pixels.shape} != ({self.height}, {self.width}, 3)")
        if self.mask.shape != (self.height, self.width):
            raise ValueError("mask shape does not match the buffer")

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.floor(self.pixels * 255.0 + 0.5), 0, 255).astype(np.uint8)


def _render_band(job: RenderJob, grid, mask, out, rows: slice):
    band_mask = mask[rows]
    live = ~band_mask
    block = out[rows]
    block[band_mask] = job.masked_color
    if not live.any():
        return
    values = eval_series_array(job.form, grid[rows][live])
    block[live] = job.scheme.colorize(PhaseMag.of(values))


def render(job: RenderJob, workers: int = 1, max_side: int = MAX_SIDE) -> PixelBuffer:
    """Evaluate and colorize every unmasked pixel of ``job``.

    Masked pixels get ``job.masked_color`` and the form is never evaluated
    there. Raises SizeError when either side exceeds ``max_side``.
    """
    width, height = int(job.width), int(job.height)
    if width > max_side or height > max_side:
        raise SizeError(f"{width}x{height} exceeds the {max_side}x{max_side} cap")
    grid, mask = sample_domain(job.domain, width, height)
    out = np.empty((height, width, 3), dtype=float)
    bands = [slice(r, min(r + BAND_ROWS, height)) for r in range(0, height, BAND_ROWS)]
    workers = max(1, int(workers))
    if workers == 1:
        for rows in bands:
            _render_band(job, grid, mask, out, rows)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # list() re-raises the first worker exception
            list(pool.map(lambda rows: _render_band(job, grid, mask, out, rows), bands))
    return PixelBuffer(width, height, out, mask)


def vertical_ray_profile(buf: PixelBuffer, x: int) -> np.ndarray:
    """Column ``x`` from top to bottom as a (height, 3) array."""
    if not 0 <= x < buf.width:
        raise IndexError(f"column {x} outside 0..{buf.width - 1}")
    return buf.pixels[:, x, :].copy()


# -- PNG -------------------------------------------------------------------

def _chunk(kind: bytes, data: bytes) -> bytes:
    crc = zlib.crc32(data, zlib.crc32(kind))
    return struct.pack(">I", len(data)) + kind + data + struct.pack(">I", crc)


def encode_png(buf: PixelBuffer) -> bytes:
    """8-bit RGB, no alpha, no interlacing, filter 0, fixed zlib level."""
    rgb = buf.to_uint8()
    raw = np.zeros((buf.height, 1 + 3 * buf.width), dtype=np.uint8)
    raw[:, 1:] = rgb.reshape(buf.height, 3 * buf.width)
    header = struct.pack(">IIBBBBB", buf.width, buf.height, 8, 2, 0, 0, 0)
    return b"".join([
        b"\x89PNG\r\n\x1a\n",
        _chunk(b"IHDR", header),
        _chunk(b"IDAT", zlib.compress(raw.tobytes(), PNG_COMPRESSION)),
        _chunk(b"IEND", b""),
    ])


def write_png(buf: PixelBuffer, path) -> Path:
    """Write ``buf`` atomically; on failure no file is left at ``path``."""
    path = Path(path)
    data = encode_png(buf)
    tmp: Optional[str] = None
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except OSError as exc:
        if tmp is not None:
            try:
                os.unlink(tmp)
            except OSError:
                pass
        raise IoError(f"cannot write PNG to {path}: {exc}") from exc
    return path
