"""Buffered LSD radix sort baseline (one stable buffered split per key byte)."""
from __future__ import annotations

from dataclasses import dataclass

from .kernels import CACHE_LINE, equal_chunks, lane_records, parallel_buffered_split
from .records import RecordLayout, as_records, as_words, empty_records, word_and_shift


@dataclass(frozen=True)
class LsdConfig:
    buffer_bytes_per_digit: int = 64
    threads: int = 1

    def __post_init__(self):
        if self.buffer_bytes_per_digit <= 0 or self.buffer_bytes_per_digit % CACHE_LINE:
            raise ValueError(f"buffer size must be a positive multiple of {CACHE_LINE} bytes")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


LSD1 = LsdConfig(buffer_bytes_per_digit=64)
LSD4 = LsdConfig(buffer_bytes_per_digit=256)


def lsd_sort(data, layout: RecordLayout = RecordLayout(), cfg: LsdConfig = LSD1):
    """Sort records in place, least significant key byte first. Stable."""
    records = as_records(data, layout)
    n = len(records)
    if n <= 1:
        return records
    work = records
    if not (records.flags.c_contiguous and records.ctypes.data % 8 == 0):
        work = empty_records(n, layout)
        work[:] = records
    home = src = as_words(work)
    dst = as_words(empty_records(n, layout))
    capacity = lane_records(cfg.buffer_bytes_per_digit, layout.record_size)
    bounds = equal_chunks(n, 8 * cfg.threads)
    for byte in range(layout.key_size):
        word, shift = word_and_shift(byte, layout.key_size)
        parallel_buffered_split(src, dst, 0, n, word, shift, bounds, cfg.threads, capacity)
        src, dst = dst, src
    if src is not home:
        home[:] = src
    if work is not records:
        records[:] = work
    return records

