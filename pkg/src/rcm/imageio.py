"""Grayscale rasters: binary PGM I/O, cropping and PSNR."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, MalformedHeader, OutOfBounds, TruncatedData, UnsupportedMaxval

_WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major raster; ``pixels`` has shape ``(height, width)``."""

    pixels: np.ndarray
    max_value: int = 255

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D raster, got shape {px.shape}")
        if px.size and (px.min() < 0 or px.max() > self.max_value):
            raise ValueError(f"samples must lie in [0, {self.max_value}]")
        dtype = np.uint8 if self.max_value <= 255 else np.uint16
        object.__setattr__(self, "pixels", np.ascontiguousarray(px, dtype=dtype))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def samples(self) -> np.ndarray:
        return self.pixels.ravel()

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (self.max_value == other.max_value
                and self.pixels.shape == other.pixels.shape
                and bool(np.array_equal(self.pixels, other.pixels)))


def read_pgm(data: bytes) -> GrayImage:
    if data[:2] != b"P5":
        if data[:2] in (b"P3", b"P6"):
            raise MalformedHeader("color images are not supported")
        raise MalformedHeader("not a binary PGM (missing P5 magic)")
    pos = 2
    fields = []
    separated = False
    while len(fields) < 3:
        if pos >= len(data):
            raise MalformedHeader("header ended early")
        c = data[pos:pos + 1]
        if c in _WHITESPACE:
            pos += 1
            separated = True
            continue
        if c == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            separated = True
            continue
        if not separated:
            raise MalformedHeader("missing whitespace between header fields")
        tok_start = pos
        while pos < len(data) and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
            pos += 1
        token = data[tok_start:pos]
        if not token.isdigit():
            raise MalformedHeader(f"non-numeric header field {token!r}")
        fields.append(int(token))
        separated = False
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise MalformedHeader("missing whitespace after maxval")
    pos += 1
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedHeader(f"bad dimensions {width}x{height}")
    if maxval < 1:
        raise MalformedHeader(f"bad maxval {maxval}")
    if maxval > 255:
        raise UnsupportedMaxval(f"maxval {maxval} > 255 is not supported")
    n = width * height
    raw = data[pos:pos + n]
    if len(raw) < n:
        raise TruncatedData(f"expected {n} samples, found {len(raw)}")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    if pixels.max() > maxval:
        raise MalformedHeader(f"sample exceeds maxval {maxval}")
    return GrayImage(pixels.copy(), maxval)


def write_pgm(image: GrayImage) -> bytes:
    if image.max_value > 255:
        raise UnsupportedMaxval(f"maxval {image.max_value} > 255 is not supported")
    header = f"P5\n{image.width} {image.height}\n{image.max_value}\n".encode("ascii")
    return header + image.pixels.astype(np.uint8).tobytes()


def load_pgm(path) -> GrayImage:
    return read_pgm(Path(path).read_bytes())


def save_pgm(image: GrayImage, path) -> None:
    Path(path).write_bytes(write_pgm(image))


def crop(image: GrayImage, x0: int, y0: int, w: int, h: int) -> GrayImage:
    if w < 1 or h < 1 or x0 < 0 or y0 < 0 or x0 + w > image.width or y0 + h > image.height:
        raise OutOfBounds(f"rectangle ({x0}, {y0}, {w}, {h}) outside "
                          f"{image.width}x{image.height} image")
    return GrayImage(image.pixels[y0:y0 + h, x0:x0 + w].copy(), image.max_value)


def mse(a: GrayImage, b: GrayImage) -> float:
    if a.pixels.shape != b.pixels.shape or a.max_value != b.max_value:
        raise DimensionMismatch(f"cannot compare {a.width}x{a.height} (L={a.max_value}) "
                                f"with {b.width}x{b.height} (L={b.max_value})")
    d = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(d * d))


def psnr(a: GrayImage, b: GrayImage) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    err = mse(a, b)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(a.max_value ** 2 / err)
