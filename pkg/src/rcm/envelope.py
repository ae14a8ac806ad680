"""Payload framing and MSB-first bit conversion.

Wire format::

    b"RCM1" | length (u32 BE) | crc32 of payload (u32 BE) | payload

The CRC is the standard IEEE 802.3 one (``zlib.crc32``).
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import EnvelopeCorrupt, TruncatedEnvelope

MAGIC = b"RCM1"
HEADER_BYTES = 12
HEADER_BITS = 8 * HEADER_BYTES


def bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_bytes(bits) -> bytes:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 8:
        raise ValueError(f"bit count {bits.size} is not a whole number of bytes")
    return np.packbits(bits).tobytes()


def pack_envelope(payload: bytes) -> bytes:
    payload = bytes(payload)
    if len(payload) >= 1 << 32:
        raise ValueError("payload too long for a 32-bit length field")
    return MAGIC + struct.pack(">II", len(payload), zlib.crc32(payload)) + payload


def envelope_encode(payload: bytes) -> np.ndarray:
    return bytes_to_bits(pack_envelope(payload))


def envelope_decode(bits) -> bytes:
    """Decode an envelope from the head of ``bits``; trailing bits are ignored."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size < HEADER_BITS:
        raise TruncatedEnvelope(f"need {HEADER_BITS} header bits, have {bits.size}")
    header = bits_to_bytes(bits[:HEADER_BITS])
    if header[:4] != MAGIC:
        raise EnvelopeCorrupt(f"bad magic {header[:4]!r}")
    length, crc = struct.unpack(">II", header[4:])
    end = HEADER_BITS + 8 * length
    if bits.size < end:
        raise TruncatedEnvelope(f"envelope declares {length} bytes, "
                                f"only {(bits.size - HEADER_BITS) // 8} available")
    payload = bits_to_bytes(bits[HEADER_BITS:end])
    if zlib.crc32(payload) != crc:
        raise EnvelopeCorrupt("CRC mismatch")
    return payload
