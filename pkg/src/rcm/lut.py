"""Lookup-table backend.

Every possible pair is marked and detected once; afterwards both operations are
one table read plus a few bit operations.  The entry for ``(x, y)`` lives at
address ``(L + 1) * x + y``.  Each table stores two output pixels and two flags:

* marking: ``F`` = second LSB is a data slot, ``S`` = first LSB must be saved;
* detection: ``F`` = second LSB holds data, ``S`` = first LSB comes from the
  saved-bit sequence (the stored first pixel then has its LSB cleared).
"""

from __future__ import annotations

import functools
import math
import statistics
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    Detection,
    DomainSpec,
    MarkedPair,
    PairClass,
    PixelPair,
    detect_arrays,
    mark_arrays,
)


@dataclass(frozen=True, eq=False)
class LutTables:
    spec: DomainSpec
    mark_x: np.ndarray
    mark_y: np.ndarray
    mark_f: np.ndarray
    mark_s: np.ndarray
    detect_x: np.ndarray
    detect_y: np.ndarray
    detect_f: np.ndarray
    detect_s: np.ndarray

    @property
    def size(self) -> int:
        return (self.spec.max_level + 1) ** 2

    @property
    def bits_per_level(self) -> int:
        return max(1, math.ceil(math.log2(self.spec.max_level + 1)))

    def address(self, x: int, y: int) -> int:
        return (self.spec.max_level + 1) * x + y

    def mark(self, x: np.ndarray, y: np.ndarray):
        """Table-driven counterpart of :func:`rcm.core.mark_arrays`."""
        a = np.asarray(x, dtype=np.intp) * (self.spec.max_level + 1) + y
        return self.mark_x[a], self.mark_y[a], self.mark_f[a], self.mark_s[a]

    def detect(self, x: np.ndarray, y: np.ndarray):
        a = np.asarray(x, dtype=np.intp) * (self.spec.max_level + 1) + y
        return self.detect_x[a], self.detect_y[a], self.detect_f[a], self.detect_s[a]

    def packed(self, table: str = "mark") -> bytes:
        """Serialise one table as ``2l + 2``-bit entries, little-endian, unpadded.

        Entry layout from the lowest bit: first pixel (l bits), second pixel
        (l bits), F, S.
        """
        if table == "mark":
            cols = self.mark_x, self.mark_y, self.mark_f, self.mark_s
        elif table == "detect":
            cols = self.detect_x, self.detect_y, self.detect_f, self.detect_s
        else:
            raise ValueError(f"unknown table {table!r}")
        l = self.bits_per_level
        px, py, f, s = (c.astype(np.uint64) for c in cols)
        entries = px | (py << l) | (f << (2 * l)) | (s << (2 * l + 1))
        width = 2 * l + 2
        bits = (entries[:, None] >> np.arange(width, dtype=np.uint64)) & 1
        return np.packbits(bits.astype(np.uint8).ravel(), bitorder="little").tobytes()


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


@functools.lru_cache(maxsize=64)
def build_luts(spec: DomainSpec) -> LutTables:
    if spec.max_level > 65535:
        raise ValueError("lookup tables support graylevels up to 65535")
    n = spec.max_level + 1
    x, y = np.divmod(np.arange(n * n, dtype=np.int32), n)
    pix = np.uint8 if spec.max_level <= 255 else np.uint16
    mx, my, mf, ms = mark_arrays(x, y, spec)
    dx, dy, df, ds = detect_arrays(x, y, spec)
    return LutTables(
        spec,
        _frozen(mx, pix), _frozen(my, pix), _frozen(mf, bool), _frozen(ms, bool),
        _frozen(dx, pix), _frozen(dy, pix), _frozen(df, bool), _frozen(ds, bool),
    )


def lut_mark_pair(t: LutTables, p, bit: Optional[int] = None) -> MarkedPair:
    x, y = p
    a = t.address(x, y)
    if bool(t.mark_f[a]) == (bit is None):
        raise ValueError(f"pair {tuple(p)}: a bit is "
                         f"{'required' if t.mark_f[a] else 'forbidden'}")
    if bit is not None and bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    ox, oy = int(t.mark_x[a]), int(t.mark_y[a])
    if t.mark_s[a]:
        return MarkedPair(ox, oy, saved_bit=x & 1)
    return MarkedPair(ox, oy | bit)


def lut_detect_pair(t: LutTables, m) -> Detection:
    x, y = m
    a = t.address(x, y)
    if t.detect_s[a]:
        return Detection(PairClass.NOT_TRANSFORMABLE, None, None, True)
    cls = PairClass.TRANSFORMABLE if x & 1 else PairClass.ODD_EMBEDDABLE
    return Detection(cls, y & 1, PixelPair(int(t.detect_x[a]), int(t.detect_y[a])), False)


def throughput_bench(image, spec: DomainSpec, mode: str = "lut", repetitions: int = 5,
                     watermark=None, operation: str = "embed") -> float:
    """Median single-iteration row-pairing throughput in megapixels per second."""
    from . import codec

    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if operation == "embed":
        def run():
            codec.embed(image, watermark, spec, codec.PairingOrder.ROW, backend=mode)
    elif operation == "extract":
        def run():
            codec.extract(image, spec, codec.PairingOrder.ROW, backend=mode)
    else:
        raise ValueError(f"unknown operation {operation!r}")
    if mode == "lut":
        build_luts(spec)
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        run()
        times.append(time.perf_counter() - t0)
    return image.width * image.height / statistics.median(times) / 1e6
