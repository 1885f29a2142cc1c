"""Comparison sorters for tiny bins and the policy that picks one.

The sorters work in place on a half-open row range of a uint64 word view and
compare full keys as unsigned big-endian integers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .records import LITTLE_ENDIAN_HOST, as_words

_LITTLE = LITTLE_ENDIAN_HOST


@dataclass(frozen=True)
class TinyPolicy:
    tiny_threshold: int = 384
    insertion_threshold: int = 32
    narrowing_factor_limit: int = 16
    narrowed_tiny_threshold: int = 32
    intro_shell_override: int | None = None

    def intro_vs_shell_threshold(self, key_size: int) -> int:
        """Largest bin handled by Shell sort; bigger tiny bins use introsort."""
        if self.intro_shell_override is not None:
            return self.intro_shell_override
        return min(max(100 + 5 * key_size, 100), 180)


def is_tiny(bin_size: int, parent_size: int, policy: TinyPolicy = TinyPolicy()) -> bool:
    """Whether a bin goes to a comparison sorter rather than another radix pass.

    A bin much narrower than its parent (factor above the limit) likely
    profits from one more radix pass, so the threshold drops.
    """
    if parent_size > policy.narrowing_factor_limit * bin_size:
        return bin_size < policy.narrowed_tiny_threshold
    return bin_size < policy.tiny_threshold


# --------------------------------------------------------------------------
# numba primitives

@njit(inline="always")
def _bswap(x):
    x = ((x & np.uint64(0x00FF00FF00FF00FF)) << np.uint64(8)) | (
        (x >> np.uint64(8)) & np.uint64(0x00FF00FF00FF00FF)
    )
    x = ((x & np.uint64(0x0000FFFF0000FFFF)) << np.uint64(16)) | (
        (x >> np.uint64(16)) & np.uint64(0x0000FFFF0000FFFF)
    )
    return (x << np.uint64(32)) | (x >> np.uint64(32))


@njit(inline="always")
def _key_word(x):
    if _LITTLE:
        return _bswap(x)
    return x


@njit(nogil=True, cache=True)
def key_less(a, b, key_words):
    """``a`` and ``b`` are single rows (1-d word arrays)."""
    for w in range(key_words):
        x = _key_word(a[w])
        y = _key_word(b[w])
        if x != y:
            return x < y
    return False


# Keys are at most two words, so comparisons work on a (hi, lo) pair of
# byte-swapped scalars; lo is 0 for one-word keys.

@njit(inline="always")
def _key(X, i, key_words):
    hi = _key_word(X[i, 0])
    if key_words == 2:
        return hi, _key_word(X[i, 1])
    return hi, np.uint64(0)


@njit(inline="always")
def _lt(ah, al, bh, bl):
    return ah < bh or (ah == bh and al < bl)


@njit(inline="always")
def _less(X, i, Y, j, key_words):
    ah, al = _key(X, i, key_words)
    bh, bl = _key(Y, j, key_words)
    return _lt(ah, al, bh, bl)


@njit(inline="always")
def _copy_row(dst, i, src, j):
    for w in range(src.shape[1]):
        dst[i, w] = src[j, w]


@njit(inline="always")
def _swap_rows(X, i, j):
    for w in range(X.shape[1]):
        t = X[i, w]
        X[i, w] = X[j, w]
        X[j, w] = t


@njit(nogil=True, cache=True)
def _gap_insertion(X, lo, hi, gap, key_words, tmp):
    for i in range(lo + gap, hi):
        kh, kl = _key(X, i, key_words)
        ph, pl = _key(X, i - gap, key_words)
        if not _lt(kh, kl, ph, pl):
            continue
        _copy_row(tmp, 0, X, i)
        j = i
        while True:
            _copy_row(X, j, X, j - gap)
            j -= gap
            if j - gap < lo:
                break
            ph, pl = _key(X, j - gap, key_words)
            if not _lt(kh, kl, ph, pl):
                break
        _copy_row(X, j, tmp, 0)


@njit(nogil=True, cache=True)
def insertion_sort_words(X, lo, hi, key_words, tmp):
    _gap_insertion(X, lo, hi, 1, key_words, tmp)


@njit(nogil=True, cache=True)
def shell_sort_words(X, lo, hi, key_words, tmp):
    _gap_insertion(X, lo, hi, 8, key_words, tmp)
    _gap_insertion(X, lo, hi, 1, key_words, tmp)


@njit(nogil=True, cache=True)
def _sift_down(X, lo, root, size, key_words):
    while True:
        child = 2 * root + 1
        if child >= size:
            return
        if child + 1 < size and _less(X, lo + child, X, lo + child + 1, key_words):
            child += 1
        if not _less(X, lo + root, X, lo + child, key_words):
            return
        _swap_rows(X, lo + root, lo + child)
        root = child


@njit(nogil=True, cache=True)
def heap_sort_words(X, lo, hi, key_words):
    size = hi - lo
    for root in range(size // 2 - 1, -1, -1):
        _sift_down(X, lo, root, size, key_words)
    for last in range(size - 1, 0, -1):
        _swap_rows(X, lo, lo + last)
        _sift_down(X, lo, 0, last, key_words)


@njit(nogil=True, cache=True)
def _floor_log2(n):
    r = 0
    while n > 1:
        n >>= 1
        r += 1
    return r


@njit(nogil=True, cache=True)
def introsort_words(X, lo, hi, key_words, insertion_threshold, tmp):
    """Median-of-three quicksort, heapsort past depth 2*floor(log2 n).

    ``tmp`` is a one-row scratch array. Returns the number of partitions
    finished by heapsort.
    """
    n = hi - lo
    if n < 2:
        return 0
    limit = 2 * _floor_log2(n)
    cutoff = max(insertion_threshold, 2)
    stack = np.empty((128, 3), dtype=np.int64)
    stack[0, 0] = lo
    stack[0, 1] = hi
    stack[0, 2] = 0
    top = 1
    heaps = 0
    while top > 0:
        top -= 1
        l = stack[top, 0]
        h = stack[top, 1]
        depth = stack[top, 2]
        while h - l > cutoff:
            if depth >= limit:
                heap_sort_words(X, l, h, key_words)
                heaps += 1
                l = h
                break
            depth += 1
            m = l + (h - l - 1) // 2
            if _less(X, m, X, l, key_words):
                _swap_rows(X, m, l)
            if _less(X, h - 1, X, m, key_words):
                _swap_rows(X, h - 1, m)
                if _less(X, m, X, l, key_words):
                    _swap_rows(X, m, l)
            vh, vl = _key(X, m, key_words)
            i = l - 1
            j = h
            while True:
                i += 1
                xh, xl = _key(X, i, key_words)
                while _lt(xh, xl, vh, vl):
                    i += 1
                    xh, xl = _key(X, i, key_words)
                j -= 1
                xh, xl = _key(X, j, key_words)
                while _lt(vh, vl, xh, xl):
                    j -= 1
                    xh, xl = _key(X, j, key_words)
                if i >= j:
                    break
                _swap_rows(X, i, j)
            # left [l, j], right [j + 1, h); keep looping on the smaller side
            if j + 1 - l < h - j - 1:
                stack[top, 0] = j + 1
                stack[top, 1] = h
                stack[top, 2] = depth
                top += 1
                h = j + 1
            else:
                stack[top, 0] = l
                stack[top, 1] = j + 1
                stack[top, 2] = depth
                top += 1
                l = j + 1
        if h - l > 1:
            _gap_insertion(X, l, h, 1, key_words, tmp)
    return heaps


@njit(nogil=True, cache=True)
def comparison_sort_words(X, lo, hi, key_words, insertion_threshold, shell_threshold, tmp):
    n = hi - lo
    if n < 2:
        return
    if n == 2:
        if _less(X, lo + 1, X, lo, key_words):
            _swap_rows(X, lo, lo + 1)
        return
    if n <= insertion_threshold:
        _gap_insertion(X, lo, hi, 1, key_words, tmp)
    elif n <= shell_threshold:
        shell_sort_words(X, lo, hi, key_words, tmp)
    else:
        introsort_words(X, lo, hi, key_words, insertion_threshold, tmp)


# --------------------------------------------------------------------------
# public API on uint8 record arrays (sorted in place)

def _scratch(records):
    return np.empty((1, records.shape[1] // 8), dtype=np.uint64)


def insertion_sort(records: np.ndarray, key_size: int) -> None:
    """Stable insertion sort of a record range."""
    insertion_sort_words(as_words(records), 0, len(records), key_size // 8, _scratch(records))


def shell_sort(records: np.ndarray, key_size: int) -> None:
    """Shell sort with gaps 8 then 1. Not stable."""
    shell_sort_words(as_words(records), 0, len(records), key_size // 8, _scratch(records))


def introspective_sort(records: np.ndarray, key_size: int, insertion_threshold: int = 32) -> int:
    """Returns how many partitions fell back to heapsort."""
    return introsort_words(
        as_words(records), 0, len(records), key_size // 8, insertion_threshold, _scratch(records)
    )


def select_sorter(n: int, key_size: int, policy: TinyPolicy = TinyPolicy()) -> str:
    """Name of the sorter :func:`comparison_sort` uses for ``n`` records."""
    if n <= policy.insertion_threshold:
        return "insertion"
    if n <= policy.intro_vs_shell_threshold(key_size):
        return "shell"
    return "introsort"


def comparison_sort(records: np.ndarray, key_size: int, policy: TinyPolicy = TinyPolicy()) -> None:
    comparison_sort_words(
        as_words(records), 0, len(records), key_size // 8,
        policy.insertion_threshold, policy.intro_vs_shell_threshold(key_size),
        _scratch(records),
    )
