"""Reversible watermarking of grayscale images by reversible contrast mapping."""

from .codec import (
    EmbedStats,
    PairingOrder,
    capacity,
    crop_recover,
    embed,
    embed_multi,
    extract,
    extract_multi,
    make_plan,
)
from .core import DomainSpec, PairClass, PixelPair, classify, detect_pair, mark_pair
from .envelope import envelope_decode, envelope_encode
from .imageio import GrayImage, crop, psnr, read_pgm, write_pgm
from .lut import build_luts

__all__ = [
    "DomainSpec", "PairClass", "PixelPair", "classify", "mark_pair", "detect_pair",
    "EmbedStats", "PairingOrder", "make_plan", "capacity", "embed", "extract",
    "embed_multi", "extract_multi", "crop_recover",
    "envelope_encode", "envelope_decode",
    "GrayImage", "read_pgm", "write_pgm", "crop", "psnr",
    "build_luts",
]
