"""Fixed-size record layout, key comparison and digit extraction.

Records are held as ``numpy.uint8`` arrays of shape ``(n, record_size)``.
The key occupies the first ``key_size`` bytes of each record and is stored
big-endian, so byte-wise lexicographic order equals numeric key order.
Digit ``i`` is the key byte of significance ``i``: digit ``key_size - 1`` is
the most significant byte (the first byte of the record).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

RADIX = 256
RECORD_SIZES = (8, 16, 24, 32)
KEY_SIZES = (8, 16)

LITTLE_ENDIAN_HOST = sys.byteorder == "little"


class RecordFormatError(ValueError):
    """Raised when raw data cannot be interpreted with a given layout."""


class ResourceError(MemoryError):
    """Raised when the working storage for a sort cannot be allocated."""


@dataclass(frozen=True)
class RecordLayout:
    record_size: int = 16
    key_size: int = 8

    def __post_init__(self):
        if self.record_size not in RECORD_SIZES:
            raise ValueError(
                f"record_size must be one of {RECORD_SIZES}, got {self.record_size}"
            )
        if self.key_size not in KEY_SIZES:
            raise ValueError(f"key_size must be one of {KEY_SIZES}, got {self.key_size}")
        if self.key_size > self.record_size:
            raise ValueError(
                f"key_size ({self.key_size}) exceeds record_size ({self.record_size})"
            )

    @property
    def words(self) -> int:
        """Record width in 64-bit words."""
        return self.record_size // 8

    @property
    def key_words(self) -> int:
        return self.key_size // 8


def as_records(data, layout: RecordLayout) -> np.ndarray:
    """Return a ``(n, record_size)`` uint8 view of ``data`` without copying."""
    arr = np.asarray(data)
    if arr.dtype != np.uint8:
        raise RecordFormatError(f"records must be uint8, got {arr.dtype}")
    if arr.ndim == 1:
        if arr.size % layout.record_size:
            raise RecordFormatError(
                f"{arr.size} bytes is not a multiple of record_size={layout.record_size}"
            )
        return arr.reshape(-1, layout.record_size)
    if arr.ndim != 2 or arr.shape[1] != layout.record_size:
        raise RecordFormatError(
            f"expected shape (n, {layout.record_size}), got {arr.shape}"
        )
    return arr


def empty_records(n: int, layout: RecordLayout) -> np.ndarray:
    try:
        return np.empty((n, layout.record_size), dtype=np.uint8)
    except MemoryError as exc:
        raise ResourceError(
            f"cannot allocate {n} records of {layout.record_size} bytes"
        ) from exc


def as_words(records: np.ndarray) -> np.ndarray:
    """View a C-contiguous uint8 record array as ``(n, record_size // 8)`` uint64."""
    if not records.flags.c_contiguous:
        raise ValueError("record array must be C-contiguous")
    return records.view(np.uint64)


def word_and_shift(byte_index: int, key_size: int) -> tuple[int, int]:
    """Locate digit ``byte_index`` inside the 64-bit word view of a record."""
    pos = key_size - 1 - byte_index
    within = pos & 7
    shift = within * 8 if LITTLE_ENDIAN_HOST else (7 - within) * 8
    return pos >> 3, shift


def digit(record, byte_index: int, key_size: int = 8) -> int:
    """Return the key byte of significance ``byte_index`` (0 = least significant)."""
    if not 0 <= byte_index < key_size:
        raise IndexError(f"byte_index {byte_index} outside [0, {key_size})")
    return int(record[key_size - 1 - byte_index])


def compare_keys(a, b, key_size: int = 8) -> int:
    """Three-way key comparison: -1, 0 or 1. Payload bytes are ignored."""
    ka = bytes(a[:key_size])
    kb = bytes(b[:key_size])
    return (ka > kb) - (ka < kb)


def key_columns(records: np.ndarray, key_size: int) -> list[np.ndarray]:
    """Key as big-endian uint64 columns, most significant word first."""
    n = records.shape[0]
    return [
        np.ascontiguousarray(records[:, 8 * j : 8 * j + 8]).view(">u8").reshape(n).astype(np.uint64)
        for j in range(key_size // 8)
    ]
