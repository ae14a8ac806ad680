"""Whole-image embedding and extraction.

Pairs are scanned in a fixed order.  A non-transformed pair pushes its first
pixel's true LSB onto a FIFO queue; each embedding slot takes the oldest queued
bit if there is one and a payload bit otherwise.  Saved bits therefore sit in
the nearest following slot, which keeps recovery local and survives cropping.
Bits still queued when the scan ends take the last payload slots instead
(``strict_tail=True`` rejects such images).

The queue length follows ``q_t = max(q_{t-1} + s_t, 0)`` with ``s_t = +1`` for a
saving pair and ``-1`` for a slot, so it is evaluated with a cumulative sum
instead of a Python loop.  Extraction sees the same slot/save pattern (classes
are recoverable pair by pair) and replays the queue exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .core import DomainSpec, detect_arrays, mark_arrays
from .envelope import envelope_decode, envelope_encode
from .errors import MisalignedCrop, PayloadTooLarge, TrailingSavedBits, TrailingUnresolvedPairs
from .imageio import GrayImage, crop
from .lut import build_luts


class PairingOrder(enum.Enum):
    ROW = "row"
    COL = "col"


def make_plan(iterations: int, pairing: str = "alt") -> List[PairingOrder]:
    """Iteration plan: ``row``/``col`` repeat one order, ``alt`` starts on rows."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if pairing == "alt":
        return [PairingOrder.ROW if i % 2 == 0 else PairingOrder.COL for i in range(iterations)]
    return [PairingOrder(pairing)] * iterations


@dataclass(frozen=True)
class EmbedStats:
    P: int
    T: int
    order: Optional[PairingOrder] = None

    @property
    def capacity_bits(self) -> int:
        return 2 * self.T - self.P

    @property
    def bitrate_bpp(self) -> Fraction:
        if self.P == 0:
            return Fraction(0)
        return Fraction(self.capacity_bits, 2 * self.P)

    def as_dict(self) -> dict:
        return {
            "order": self.order.value if self.order else None,
            "P": self.P,
            "T": self.T,
            "capacity_bits": self.capacity_bits,
            "bitrate_bpp": float(self.bitrate_bpp),
        }


def _kernels(spec: DomainSpec, backend: str):
    if backend == "lut":
        t = build_luts(spec)
        return t.mark, t.detect
    if backend == "direct":
        return (lambda x, y: mark_arrays(x, y, spec)), (lambda x, y: detect_arrays(x, y, spec))
    raise ValueError(f"unknown backend {backend!r}")


def _oriented(pixels: np.ndarray, order: PairingOrder) -> np.ndarray:
    return pixels if order is PairingOrder.ROW else pixels.T


def _split(image: GrayImage, spec: DomainSpec, order: PairingOrder):
    if image.max_value != spec.max_level:
        raise ValueError(f"image maxval {image.max_value} does not match "
                         f"domain ceiling {spec.max_level}")
    a = _oriented(image.pixels, order)
    n = a.shape[1] - a.shape[1] % 2
    return a, n, a[:, 0:n:2].ravel().astype(np.int32), a[:, 1:n:2].ravel().astype(np.int32)


def _join(a, n, x, y, order, max_value) -> GrayImage:
    out = a.copy()
    rows = a.shape[0]
    out[:, 0:n:2] = x.reshape(rows, n // 2)
    out[:, 1:n:2] = y.reshape(rows, n // 2)
    return GrayImage(_oriented(out, order), max_value)


def _queue(slot: np.ndarray, strict_tail: bool):
    """Place saved bits; returns (forward carriers, tail carriers, payload, unplaced).

    Forward carriers take queued bits in scan order.  Bits still queued when the
    scan ends go, unless ``strict_tail``, to the last payload slots (the nearest
    free slots before them), in queue order.
    """
    if slot.size == 0:
        return slot.copy(), np.zeros(0, np.intp), slot.copy(), 0
    walk = np.cumsum(np.where(slot, -1, 1), dtype=np.int64)
    q = walk - np.minimum(np.minimum.accumulate(walk), 0)
    before = np.concatenate(([0], q[:-1]))
    forward = slot & (before > 0)
    payload = slot & (before == 0)
    pending = int(q[-1])
    tail = np.zeros(0, np.intp)
    if pending and not strict_tail:
        free = np.flatnonzero(payload)
        tail = free[max(free.size - pending, 0):]
        payload = payload.copy()
        payload[tail] = False
        pending -= tail.size
    return forward, tail, payload, pending


def capacity(image: GrayImage, spec: DomainSpec, order: PairingOrder,
             backend: str = "lut") -> EmbedStats:
    mark, _ = _kernels(spec, backend)
    _, _, x, y = _split(image, spec, order)
    _, _, slot, _ = mark(x, y)
    return EmbedStats(int(x.size), int(np.count_nonzero(slot)), order)


def embed(image: GrayImage, watermark, spec: DomainSpec, order: PairingOrder,
          backend: str = "lut", strict_tail: bool = False):
    """Embed ``watermark`` (a bit sequence) in one pass; returns (marked, stats).

    Slots left over after the watermark are filled with zero bits, so the
    extracted watermark always has exactly ``capacity_bits`` bits.  With
    ``strict_tail`` an image whose last saving pairs have no later slot is
    rejected instead of falling back to the preceding free slots.
    """
    mark, _ = _kernels(spec, backend)
    a, n, x, y = _split(image, spec, order)
    ox, oy, slot, save = mark(x, y)
    stats = EmbedStats(int(x.size), int(np.count_nonzero(slot)), order)
    w = np.asarray([] if watermark is None else watermark, dtype=np.uint8).ravel()
    if stats.capacity_bits < 0 or w.size > stats.capacity_bits:
        raise PayloadTooLarge(int(w.size), stats.capacity_bits)
    if w.size and w.max() > 1:
        raise ValueError("watermark must contain only 0/1 values")
    forward, tail, payload, pending = _queue(slot, strict_tail)
    if pending:
        raise TrailingSavedBits(pending)
    saved = x[save] & 1
    n_fwd = saved.size - tail.size
    bits = np.zeros(x.size, dtype=np.int32)
    bits[forward] = saved[:n_fwd]
    bits[tail] = saved[n_fwd:]
    bits[np.flatnonzero(payload)[:w.size]] = w
    return _join(a, n, ox, oy.astype(np.int32) | bits, order, image.max_value), stats


@dataclass
class _Extraction:
    image: GrayImage
    watermark: np.ndarray
    stats: EmbedStats
    unresolved: int
    slot_mask: np.ndarray = field(repr=False)


def _extract(marked: GrayImage, spec: DomainSpec, order: PairingOrder, backend: str,
             strict_tail: bool) -> _Extraction:
    _, detect = _kernels(spec, backend)
    a, n, x, y = _split(marked, spec, order)
    ox, oy, slot, save = detect(x, y)
    ox = ox.astype(np.int32)
    forward, tail, payload, pending = _queue(slot, strict_tail)
    saved = np.concatenate((y[forward], y[tail])) & 1
    targets = np.flatnonzero(save)
    ox[targets[:saved.size]] |= saved
    image = _join(a, n, ox, oy, order, marked.max_value)
    pair_mask = np.zeros(a.shape, dtype=bool)
    pair_mask[:, 0:n:2] = slot.reshape(a.shape[0], n // 2)
    pair_mask[:, 1:n:2] = pair_mask[:, 0:n:2]
    return _Extraction(image, (y[payload] & 1).astype(np.uint8),
                       EmbedStats(int(x.size), int(np.count_nonzero(slot)), order),
                       pending, _oriented(pair_mask, order))


def extract(marked: GrayImage, spec: DomainSpec, order: PairingOrder, backend: str = "lut",
            strict_tail: bool = False):
    """Recover (original, watermark bits, stats) from a singly marked image."""
    r = _extract(marked, spec, order, backend, strict_tail)
    if r.unresolved:
        raise TrailingUnresolvedPairs(r.unresolved)
    return r.image, r.watermark, r.stats


def embed_bits(image: GrayImage, bits, plan: Sequence[PairingOrder], spec: DomainSpec,
               backend: str = "lut", strict_tail: bool = False):
    """Chain iterations, filling each to capacity in plan order."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    pos = 0
    stats = []
    current = image
    for i, order in enumerate(plan):
        cap = capacity(current, spec, order, backend)
        if cap.capacity_bits < 0:
            raise PayloadTooLarge(int(bits.size), sum(s.capacity_bits for s in stats),
                                  f"iteration {i + 1} cannot hold its own saved bits")
        chunk = bits[pos:pos + cap.capacity_bits]
        current, st = embed(current, chunk, spec, order, backend, strict_tail)
        pos += chunk.size
        stats.append(st)
    if pos < bits.size:
        raise PayloadTooLarge(int(bits.size), sum(s.capacity_bits for s in stats),
                              f"aggregate over {len(plan)} iteration(s)")
    return current, stats


def extract_bits(marked: GrayImage, plan: Sequence[PairingOrder], spec: DomainSpec,
                 backend: str = "lut", strict_tail: bool = False):
    chunks = []
    stats = []
    current = marked
    for order in reversed(plan):
        current, w, st = extract(current, spec, order, backend, strict_tail)
        chunks.append(w)
        stats.append(st)
    chunks.reverse()
    stats.reverse()
    return current, np.concatenate(chunks) if chunks else np.zeros(0, np.uint8), stats


def embed_multi(image: GrayImage, payload: bytes, plan: Sequence[PairingOrder],
                spec: DomainSpec, backend: str = "lut", strict_tail: bool = False):
    """Frame ``payload`` in an envelope and embed it over the plan's iterations."""
    return embed_bits(image, envelope_encode(payload), plan, spec, backend, strict_tail)


def extract_multi(marked: GrayImage, plan: Sequence[PairingOrder], spec: DomainSpec,
                  backend: str = "lut", strict_tail: bool = False):
    original, bits, _ = extract_bits(marked, plan, spec, backend, strict_tail)
    return original, envelope_decode(bits)


def capacity_chain(image: GrayImage, spec: DomainSpec, plan: Sequence[PairingOrder],
                   rng: Optional[np.random.Generator] = None, backend: str = "lut",
                   strict_tail: bool = False):
    """Fill successive iterations with random bits at full capacity.

    Stops early at the first iteration that has no positive capacity or whose
    saved bits cannot be placed.  Returns (marked image, per-iteration stats).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    current = image
    stats = []
    for order in plan:
        cap = capacity(current, spec, order, backend)
        if cap.capacity_bits <= 0:
            break
        bits = rng.integers(0, 2, cap.capacity_bits, dtype=np.uint8)
        try:
            current, st = embed(current, bits, spec, order, backend, strict_tail)
        except TrailingSavedBits:
            break
        stats.append(st)
    return current, stats


@dataclass
class CropReport:
    recovered: GrayImage
    watermark_fragment: np.ndarray
    exact_pixel_fraction: Optional[float]
    slot_mask: np.ndarray = field(repr=False)
    unresolved: int = 0


def check_alignment(image: GrayImage, rect, order: PairingOrder) -> None:
    x0, y0, w, h = rect
    if order is PairingOrder.ROW:
        off, ext, full = x0, w, image.width
    else:
        off, ext, full = y0, h, image.height
    if off % 2 or (ext % 2 and off + ext != full):
        raise MisalignedCrop(f"rectangle {tuple(rect)} is not aligned to {order.value} pairing")


def crop_recover(marked: GrayImage, rect, spec: DomainSpec, order: PairingOrder,
                 original: Optional[GrayImage] = None, backend: str = "lut",
                 strict_tail: bool = False) -> CropReport:
    """Recover a pair-aligned crop ``(x0, y0, w, h)`` of a marked image.

    ``original`` is the full unmarked image, used only to score the result.
    Pairs whose saved bit lies outside the crop keep a cleared first LSB.
    """
    check_alignment(marked, rect, order)
    r = _extract(crop(marked, *rect), spec, order, backend, strict_tail)
    fraction = None
    if original is not None:
        truth = crop(original, *rect)
        fraction = float(np.mean(truth.pixels == r.image.pixels))
    return CropReport(r.image, r.watermark, fraction, r.slot_mask, r.unresolved)
