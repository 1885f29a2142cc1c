"""Split kernels: counting-sort split and buffered (write-combining) split.

Both kernels move whole records from a source array to a destination array,
grouping them by one key digit in ascending digit order while preserving the
source order within each group. The hot loops are numba functions compiled
with ``nogil=True`` so the buffered split can run on several Python threads
at once; they operate on the uint64 word view of the record arrays (see
:func:`raduls.records.as_words`).
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .records import RADIX, as_words, word_and_shift

DEFAULT_LANE_BYTES = 256
CACHE_LINE = 64

_MASK = np.uint64(0xFF)


@dataclass(frozen=True)
class Bin:
    """Contiguous record range sharing a digit value after a split.

    ``parity`` says which working array holds the records: 0 for the
    caller's array, 1 for the auxiliary one.
    """

    start: int
    end: int
    next_byte: int
    parity: int = 0

    @property
    def size(self) -> int:
        return self.end - self.start


def lane_records(buffer_bytes: int, record_size: int) -> int:
    """Records held by one write-combining lane of ``buffer_bytes`` bytes."""
    if buffer_bytes <= 0 or buffer_bytes % CACHE_LINE:
        raise ValueError(f"buffer_bytes must be a positive multiple of {CACHE_LINE}")
    return max(1, buffer_bytes // record_size)


class BufferSet:
    """Per-thread staging area: one lane of ``capacity`` records per digit."""

    def __init__(self, record_words: int, capacity: int):
        self.capacity = capacity
        self.lanes = np.empty((RADIX, capacity, record_words), dtype=np.uint64)
        self.fill = np.zeros(RADIX, dtype=np.int64)


# --------------------------------------------------------------------------
# numba kernels (word views, half-open ranges)

@njit(nogil=True, cache=True)
def _histogram(src, start, end, word, shift, hist):
    for i in range(start, end):
        hist[np.intp((src[i, word] >> shift) & _MASK)] += 1


@njit(nogil=True, cache=True)
def _cursors(hist, base, cursors):
    acc = base
    for d in range(256):
        cursors[d] = acc
        acc += hist[d]


@njit(nogil=True, cache=True)
def _scatter_plain(src, dst, start, end, word, shift, cursors):
    width = src.shape[1]
    for i in range(start, end):
        d = np.intp((src[i, word] >> shift) & _MASK)
        c = cursors[d]
        for w in range(width):
            dst[c, w] = src[i, w]
        cursors[d] = c + 1


@njit(nogil=True, cache=True)
def _flush_lane(dst, lanes, fill, cursors, d):
    f = fill[d]
    c = cursors[d]
    width = lanes.shape[2]
    for k in range(f):
        for w in range(width):
            dst[c + k, w] = lanes[d, k, w]
    cursors[d] = c + f
    fill[d] = 0


@njit(nogil=True, cache=True)
def _scatter_buffered(src, dst, start, end, word, shift, cursors, lanes, fill):
    width = src.shape[1]
    cap = lanes.shape[1]
    for i in range(start, end):
        d = np.intp((src[i, word] >> shift) & _MASK)
        f = fill[d]
        for w in range(width):
            lanes[d, f, w] = src[i, w]
        fill[d] = f + 1
        if f + 1 == cap:
            _flush_lane(dst, lanes, fill, cursors, d)
    for d in range(256):
        if fill[d] > 0:
            _flush_lane(dst, lanes, fill, cursors, d)


@njit(nogil=True, cache=True)
def split_plain(src, dst, start, end, word, shift, hist):
    """Counting-sort ``src[start:end]`` into ``dst[start:end]``; fills ``hist``."""
    hist[:] = 0
    _histogram(src, start, end, word, shift, hist)
    cursors = np.empty(256, dtype=np.int64)
    _cursors(hist, start, cursors)
    _scatter_plain(src, dst, start, end, word, shift, cursors)


@njit(nogil=True, cache=True)
def split_buffered(src, dst, start, end, word, shift, hist, lanes, fill):
    """Single-threaded buffered split of one range (one chunk)."""
    hist[:] = 0
    _histogram(src, start, end, word, shift, hist)
    cursors = np.empty(256, dtype=np.int64)
    _cursors(hist, start, cursors)
    fill[:] = 0
    _scatter_buffered(src, dst, start, end, word, shift, cursors, lanes, fill)


# --------------------------------------------------------------------------
# chunking and the parallel buffered split

def equal_chunks(n: int, count: int) -> np.ndarray:
    """Boundaries of ``count`` near-equal chunks covering ``[0, n)``."""
    return np.linspace(0, n, count + 1).astype(np.int64)


def linear_chunks(n: int, threads: int, multiplier: int = 8, first_divisor: int = 64) -> np.ndarray:
    """Boundaries of ``multiplier*threads`` chunks growing linearly from ``n/(first_divisor*threads)``.

    Sizes are rounded down; the last chunk takes the remainder.
    """
    count = multiplier * threads
    if count == 1:
        return np.array([0, n], dtype=np.int64)
    first = n / (first_divisor * threads)
    step = 2.0 * (n - count * first) / (count * (count - 1))
    sizes = np.floor(first + step * np.arange(count)).astype(np.int64)
    sizes = np.maximum(sizes, 0)
    sizes[-1] = 0
    sizes[-1] = n - sizes.sum()
    return np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)


def _run_threads(work, threads: int) -> None:
    """Run ``work(thread_index)`` on ``threads`` threads, the caller being one."""
    if threads <= 1:
        work(0)
        return
    with ThreadPoolExecutor(max_workers=threads - 1) as pool:
        futures = [pool.submit(work, t) for t in range(1, threads)]
        work(0)
        for f in futures:
            f.result()


def parallel_buffered_split(src, dst, start, end, word, shift, bounds, threads, capacity):
    """Buffered split of word arrays over ``[start, end)`` with ``threads`` threads.

    ``bounds`` are chunk boundaries relative to ``start``. Chunks are claimed
    through a shared counter in both scans. Each (chunk, digit) pair owns a
    disjoint destination sub-range ordered by digit, then chunk index, which
    keeps the split stable and free of write races. Returns the histogram.
    """
    bounds = np.asarray(bounds, dtype=np.int64) + start
    n_chunks = len(bounds) - 1
    hists = np.zeros((n_chunks, RADIX), dtype=np.int64)
    shift = np.uint64(shift)

    # next() on itertools.count is atomic under the GIL
    claims = itertools.count()

    def count_chunks(_):
        while (c := next(claims)) < n_chunks:
            _histogram(src, bounds[c], bounds[c + 1], word, shift, hists[c])

    _run_threads(count_chunks, threads)

    by_digit = hists.T.ravel()
    offsets = np.cumsum(by_digit) - by_digit
    cursors = np.ascontiguousarray(offsets.reshape(RADIX, n_chunks).T) + start
    claims = itertools.count()

    def scatter_chunks(_):
        buffers = BufferSet(src.shape[1], capacity)
        while (c := next(claims)) < n_chunks:
            _scatter_buffered(
                src, dst, bounds[c], bounds[c + 1], word, shift,
                cursors[c], buffers.lanes, buffers.fill,
            )

    _run_threads(scatter_chunks, threads)
    return hists.sum(axis=0)


# --------------------------------------------------------------------------
# public API on uint8 record arrays

def build_histogram(records: np.ndarray, byte_index: int, key_size: int) -> np.ndarray:
    """Count of records per digit value at ``byte_index``."""
    hist = np.zeros(RADIX, dtype=np.int64)
    if len(records):
        word, shift = word_and_shift(byte_index, key_size)
        _histogram(as_words(records), 0, len(records), word, np.uint64(shift), hist)
    return hist


def exclusive_prefix_sum(hist) -> np.ndarray:
    hist = np.asarray(hist, dtype=np.int64)
    out = np.zeros_like(hist)
    np.cumsum(hist[:-1], out=out[1:])
    return out


def bins_from_histogram(hist, byte_index: int, base: int = 0, parity: int = 1) -> list[Bin]:
    """The 256 bins, in digit order, that a split with ``hist`` produced."""
    ends = np.cumsum(hist) + base
    starts = ends - hist
    return [Bin(int(s), int(e), byte_index - 1, parity) for s, e in zip(starts, ends)]


def _check_pair(src, dst):
    if src.shape != dst.shape:
        raise ValueError(f"src and dst shapes differ: {src.shape} vs {dst.shape}")
    if np.shares_memory(src, dst):
        raise ValueError("src and dst must not overlap")


def radix_split(src, dst, byte_index: int, key_size: int, base: int = 0, parity: int = 0) -> list[Bin]:
    """Stable counting-sort split of ``src`` into ``dst`` on one digit.

    Returned bins are offset by ``base`` and carry the flipped ``parity``.
    """
    _check_pair(src, dst)
    hist = np.zeros(RADIX, dtype=np.int64)
    if len(src):
        word, shift = word_and_shift(byte_index, key_size)
        split_plain(as_words(src), as_words(dst), 0, len(src), word, np.uint64(shift), hist)
    return bins_from_histogram(hist, byte_index, base, 1 - parity)


def buffered_radix_split(
    src,
    dst,
    byte_index: int,
    key_size: int,
    threads: int = 1,
    chunks=None,
    buffer_bytes: int = DEFAULT_LANE_BYTES,
    base: int = 0,
    parity: int = 0,
) -> list[Bin]:
    """Buffered split of ``src`` into ``dst`` with ``threads`` threads.

    ``chunks`` is either a chunk count (equal chunks) or explicit boundaries
    over ``[0, len(src)]``; by default ``8*threads`` linearly growing chunks.
    """
    _check_pair(src, dst)
    n = len(src)
    if chunks is None:
        bounds = linear_chunks(n, threads)
    elif np.isscalar(chunks):
        bounds = equal_chunks(n, int(chunks))
    else:
        bounds = np.asarray(chunks, dtype=np.int64)
        if bounds[0] != 0 or bounds[-1] != n or np.any(np.diff(bounds) < 0):
            raise ValueError("chunk boundaries must be non-decreasing over [0, n]")
    capacity = lane_records(buffer_bytes, src.shape[1])
    word, shift = word_and_shift(byte_index, key_size)
    hist = parallel_buffered_split(
        as_words(src), as_words(dst), 0, n, word, shift, bounds, threads, capacity
    )
    return bins_from_histogram(hist, byte_index, base, 1 - parity)
