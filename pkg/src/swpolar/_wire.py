"""Bit packing shared by the binary wire formats."""
from __future__ import annotations

import hashlib

import numpy as np


def symbol_bits(q: int) -> int:
    return max(1, (q - 1).bit_length())


def pack_symbols(symbols, q: int) -> bytes:
    """Each symbol as ceil(log2 q) bits, least significant first, bit stream
    packed little-endian (so q = 2 gives 8 symbols per byte)."""
    s = np.asarray(symbols, dtype=np.int64).ravel()
    w = symbol_bits(q)
    bits = (s[:, None] >> np.arange(w)) & 1
    return np.packbits(bits.ravel().astype(np.uint8), bitorder="little").tobytes()


def packed_size(count: int, q: int) -> int:
    return (count * symbol_bits(q) + 7) // 8


def unpack_symbols(data: bytes, count: int, q: int) -> np.ndarray:
    w = symbol_bits(q)
    raw = np.frombuffer(data, dtype=np.uint8, count=packed_size(count, q))
    bits = np.unpackbits(raw, bitorder="little")[:count * w].reshape(count, w).astype(np.int64)
    return (bits << np.arange(w)).sum(axis=1)


def mask_digest(mask) -> int:
    """First 8 bytes of SHA-256 over the packed mask, as an unsigned int."""
    packed = np.packbits(np.asarray(mask, dtype=np.uint8), bitorder="little").tobytes()
    return int.from_bytes(hashlib.sha256(packed).digest()[:8], "little")


def text_digest(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")
