"""Bit packing for b-bit residual codes.

Codes pack low-order-first within each byte: for b=4 the low nibble is
the earlier dimension (0xB3 decodes to [3, 11]); for b=2 the two lowest
bits come first (0xE4 decodes to [0, 1, 2, 3]). A 128-dim token packs
into 128*b/8 = 16*b bytes.
"""

from __future__ import annotations

import numpy as np


def codes_per_byte(b: int) -> int:
    if b not in (2, 4):
        raise ValueError(f"b must be 2 or 4, got {b}")
    return 8 // b


def pack_codes(codes: np.ndarray, b: int) -> np.ndarray:
    """Pack b-bit codes along the last axis; its length must divide 8//b."""
    per = codes_per_byte(b)
    if codes.shape[-1] % per:
        raise ValueError(f"last axis {codes.shape[-1]} not a multiple of {per}")
    if codes.min(initial=0) < 0 or codes.max(initial=0) >= (1 << b):
        raise ValueError(f"codes out of range for b={b}")
    grouped = codes.astype(np.uint8).reshape(*codes.shape[:-1], -1, per)
    packed = np.zeros(grouped.shape[:-1], dtype=np.uint8)
    for slot in range(per):
        packed |= grouped[..., slot] << np.uint8(slot * b)
    return packed


def unpack_codes(packed: np.ndarray, b: int) -> np.ndarray:
    """Inverse of pack_codes; expands the last axis by 8//b, low bits first."""
    per = codes_per_byte(b)
    packed = np.asarray(packed, dtype=np.uint8)
    mask = np.uint8((1 << b) - 1)
    slots = [(packed >> np.uint8(slot * b)) & mask for slot in range(per)]
    return np.stack(slots, axis=-1).reshape(*packed.shape[:-1], -1)
