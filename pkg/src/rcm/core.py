"""Pairwise reversible contrast mapping.

The forward map sends a pixel pair ``(x, y)`` to ``(2x - y, 2y - x)``.  It keeps
``x + y`` and triples ``x - y``, so averages are preserved while local contrast
grows.  The inverse is a ceil-weighted average::

    x = ceil((2x' + y') / 3)
    y = ceil((x' + 2y') / 3)

which still returns the original pair when both LSBs of ``(x', y')`` have been
cleared, unless the pair was made of two odd values.  Those odd pairs are
flagged through the first pixel's LSB instead, and the odd pairs whose
re-oddified marks would collide with non-transformed pairs are removed from
the transform domain.

Everything here is pure.  Scalar functions take and return Python ints; the
``*_arrays`` functions are vectorised numpy equivalents used by the image
codec's direct backend.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


class PixelPair(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class DomainSpec:
    """Graylevel ceiling and optional distortion threshold.

    ``threshold`` is the strict bound on ``|x - y|`` for a pair to be
    transformed; ``None`` disables distortion control.
    """

    max_level: int = 255
    threshold: Optional[int] = None

    def __post_init__(self):
        if self.max_level < 1:
            raise ValueError(f"max_level must be >= 1, got {self.max_level}")
        if self.max_level % 2 == 0:
            # the flag-bit overwrite x|1 must stay within [0, L]
            raise ValueError(f"max_level must be odd, got {self.max_level}")
        if self.threshold is not None and not 1 <= self.threshold <= self.max_level + 1:
            raise ValueError(
                f"threshold must lie in [1, {self.max_level + 1}], got {self.threshold}")


class PairClass(enum.IntEnum):
    TRANSFORMABLE = 0
    ODD_EMBEDDABLE = 1
    NOT_TRANSFORMABLE = 2


@dataclass(frozen=True)
class MarkedPair:
    x: int
    y: int
    saved_bit: Optional[int] = None


@dataclass(frozen=True)
class Detection:
    cls: PairClass
    extracted_bit: Optional[int]
    recovered: Optional[PixelPair]
    needs_saved_bit: bool


def _ceil_div3(n: int) -> int:
    return -((-n) // 3)


def forward_rcm(p, spec: Optional[DomainSpec] = None) -> PixelPair:
    x, y = p
    out = PixelPair(2 * x - y, 2 * y - x)
    if spec is not None and not (0 <= out.x <= spec.max_level and 0 <= out.y <= spec.max_level):
        raise ValueError(f"pair {tuple(p)} lies outside the transform domain")
    return out


def inverse_rcm(p) -> PixelPair:
    xp, yp = p
    return PixelPair(_ceil_div3(2 * xp + yp), _ceil_div3(xp + 2 * yp))


def in_domain(p, spec: DomainSpec) -> bool:
    x, y = p
    L = spec.max_level
    if not (0 <= 2 * x - y <= L and 0 <= 2 * y - x <= L):
        return False
    return spec.threshold is None or abs(x - y) < spec.threshold


def is_ambiguous_odd(p, spec: DomainSpec) -> bool:
    """True for odd pairs that a marked non-transformed neighbour could mimic.

    A non-transformed pair is marked by clearing the first LSB, and detection
    re-sets both LSBs to test for an odd pair.  So every odd pair whose even
    neighbours (x-1, y), (x, y-1), (x-1, y-1) are not all transformable must be
    dropped from the domain.
    """
    x, y = p
    if not (x & 1 and y & 1) or not in_domain(p, spec):
        return False
    return not (in_domain((x - 1, y), spec)
                and in_domain((x, y - 1), spec)
                and in_domain((x - 1, y - 1), spec))


def in_dc(p, spec: DomainSpec) -> bool:
    return in_domain(p, spec) and not is_ambiguous_odd(p, spec)


def classify(p, spec: DomainSpec) -> PairClass:
    x, y = p
    if not in_dc(p, spec):
        return PairClass.NOT_TRANSFORMABLE
    if x & 1 and y & 1:
        return PairClass.ODD_EMBEDDABLE
    return PairClass.TRANSFORMABLE


def mark_pair(p, spec: DomainSpec, bit: Optional[int] = None) -> MarkedPair:
    cls = classify(p, spec)
    if (bit is None) != (cls is PairClass.NOT_TRANSFORMABLE):
        raise ValueError(f"pair {tuple(p)} is {cls.name}: a bit is "
                         f"{'forbidden' if bit is not None else 'required'}")
    if bit is not None and bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    x, y = p
    if cls is PairClass.TRANSFORMABLE:
        xp, yp = forward_rcm(p)
        return MarkedPair(xp | 1, (yp & ~1) | bit)
    if cls is PairClass.ODD_EMBEDDABLE:
        return MarkedPair(x & ~1, (y & ~1) | bit)
    return MarkedPair(x & ~1, y, saved_bit=x & 1)


def detect_pair(m, spec: DomainSpec) -> Detection:
    x, y = m
    if x & 1:
        return Detection(PairClass.TRANSFORMABLE, y & 1,
                         inverse_rcm((x & ~1, y & ~1)), False)
    candidate = PixelPair(x | 1, y | 1)
    if in_dc(candidate, spec):
        return Detection(PairClass.ODD_EMBEDDABLE, y & 1, candidate, False)
    return Detection(PairClass.NOT_TRANSFORMABLE, None, None, True)


def restore_pair(m, saved_bit: int) -> PixelPair:
    """Rebuild a non-transformed pair from its marked value and saved LSB."""
    x, y = m
    return PixelPair((x & ~1) | saved_bit, y)


# vectorised kernels ---------------------------------------------------------

def in_domain_arrays(x: np.ndarray, y: np.ndarray, spec: DomainSpec) -> np.ndarray:
    L = spec.max_level
    u = 2 * x - y
    v = 2 * y - x
    ok = (u >= 0) & (u <= L) & (v >= 0) & (v <= L)
    if spec.threshold is not None:
        ok &= np.abs(x - y) < spec.threshold
    return ok


def in_dc_arrays(x: np.ndarray, y: np.ndarray, spec: DomainSpec) -> np.ndarray:
    dom = in_domain_arrays(x, y, spec)
    odd = (x & y & 1).astype(bool)
    ambiguous = odd & dom & ~(in_domain_arrays(x - 1, y, spec)
                              & in_domain_arrays(x, y - 1, spec)
                              & in_domain_arrays(x - 1, y - 1, spec))
    return dom & ~ambiguous


def classify_arrays(x, y, spec: DomainSpec) -> np.ndarray:
    x = np.asarray(x, dtype=np.int32)
    y = np.asarray(y, dtype=np.int32)
    dc = in_dc_arrays(x, y, spec)
    odd = (x & y & 1).astype(bool)
    cls = np.full(x.shape, PairClass.NOT_TRANSFORMABLE, dtype=np.uint8)
    cls[dc & ~odd] = PairClass.TRANSFORMABLE
    cls[dc & odd] = PairClass.ODD_EMBEDDABLE
    return cls


def mark_arrays(x, y, spec: DomainSpec):
    """Mark pairs with a zero placeholder in every slot LSB.

    Returns ``(out_x, out_y, slot, save)`` where ``slot`` flags pairs whose
    second LSB carries data and ``save`` flags pairs whose first LSB must be
    stored elsewhere.
    """
    x = np.asarray(x, dtype=np.int32)
    y = np.asarray(y, dtype=np.int32)
    dc = in_dc_arrays(x, y, spec)
    odd = (x & y & 1).astype(bool)
    tr = dc & ~odd
    out_x = np.where(tr, (2 * x - y) | 1, x & ~1)
    out_y = np.where(tr, (2 * y - x) & ~1, np.where(dc, y & ~1, y))
    return out_x, out_y, dc, ~dc


def detect_arrays(x, y, spec: DomainSpec):
    """Vectorised detection.

    Returns ``(out_x, out_y, slot, save)``.  For ``save`` pairs ``out_x`` has
    its LSB cleared, pending the saved bit; ``out_y`` is final everywhere.
    """
    x = np.asarray(x, dtype=np.int32)
    y = np.asarray(y, dtype=np.int32)
    flagged = (x & 1).astype(bool)
    x0 = x & ~1
    y0 = y & ~1
    odd_ok = ~flagged & in_dc_arrays(x | 1, y | 1, spec)
    out_x = np.where(flagged, (2 * x0 + y0 + 2) // 3, np.where(odd_ok, x | 1, x0))
    out_y = np.where(flagged, (x0 + 2 * y0 + 2) // 3, np.where(odd_ok, y | 1, y))
    slot = flagged | odd_ok
    return out_x, out_y, slot, ~slot
