"""Sortedness, permutation and oracle checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .records import as_words, key_columns
from .small_sorts import _less


@dataclass
class VerifyReport:
    sorted_ok: bool
    multiset_ok: bool
    stable_ok: bool | None = None
    mismatch_index: int | None = None

    @property
    def ok(self) -> bool:
        return self.sorted_ok and self.multiset_ok and self.stable_ok is not False


@njit(nogil=True, cache=True)
def _first_descent(X, key_words):
    for i in range(X.shape[0] - 1):
        if _less(X, i + 1, X, i, key_words):
            return i
    return -1


def check_sorted(records: np.ndarray, key_size: int) -> tuple[bool, int | None]:
    """``(True, None)`` if keys are non-decreasing, else ``(False, i)`` with
    ``key[i] > key[i + 1]``."""
    if len(records) < 2:
        return True, None
    i = _first_descent(as_words(np.ascontiguousarray(records)), key_size // 8)
    return (True, None) if i < 0 else (False, int(i))


@njit(inline="always")
def _mix(x):
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@njit(nogil=True, cache=True)
def _digest_words(X):
    lo = np.uint64(0)
    hi = np.uint64(0)
    for i in range(X.shape[0]):
        a = np.uint64(0x243F6A8885A308D3)
        b = np.uint64(0x13198A2E03707344)
        for w in range(X.shape[1]):
            v = X[i, w]
            a = _mix(a ^ v)
            b = _mix(b + ((v << np.uint64(29)) | (v >> np.uint64(35))))
        lo += a
        hi += b
    return lo, hi


def digest(records: np.ndarray) -> tuple[int, int]:
    """Order-independent digest: ``(record count, 128-bit sum of record hashes)``.

    Each record gets two independent 64-bit hashes; they are summed modulo
    2**64 per lane, so any reordering leaves the digest unchanged. Two
    different multisets collide with probability far below 2**-64 for
    N <= 2**32, assuming the hash lanes behave as independent random words.
    """
    if len(records) == 0:
        return 0, 0
    lo, hi = _digest_words(as_words(np.ascontiguousarray(records)))
    return len(records), (int(hi) << 64) | int(lo)


def check_permutation(before_digest, after: np.ndarray) -> bool:
    return digest(after) == tuple(before_digest)


def oracle_order(records: np.ndarray, key_size: int) -> np.ndarray:
    """Stable argsort by key using numpy's comparison-based stable sort."""
    cols = key_columns(records, key_size)
    if len(cols) == 1:
        return np.argsort(cols[0], kind="stable")
    return np.lexsort(cols[::-1])


def oracle_sort(records: np.ndarray, key_size: int) -> np.ndarray:
    """Stably sorted copy."""
    if len(records) == 0:
        return records.copy()
    return records[oracle_order(records, key_size)]


def keys_equal(a: np.ndarray, b: np.ndarray, key_size: int) -> bool:
    return a.shape == b.shape and np.array_equal(a[:, :key_size], b[:, :key_size])


def verify(after: np.ndarray, key_size: int, before_digest=None, reference=None, stable=False) -> VerifyReport:
    """Check a sort result.

    With ``reference`` (an oracle-sorted copy of the input) the key sequence
    must match it; with ``stable=True`` the whole records must match.
    """
    sorted_ok, index = check_sorted(after, key_size)
    multiset_ok = True if before_digest is None else check_permutation(before_digest, after)
    stable_ok = None
    if reference is not None:
        if not keys_equal(after, reference, key_size):
            sorted_ok = False
            diff = np.nonzero(np.any(after[:, :key_size] != reference[:, :key_size], axis=1))[0]
            index = int(diff[0]) if len(diff) else index
        if stable:
            stable_ok = bool(np.array_equal(after, reference))
            if not stable_ok and index is None:
                index = int(np.nonzero(np.any(after != reference, axis=1))[0][0])
    if not multiset_ok and index is None:
        index = 0
    return VerifyReport(sorted_ok, multiset_ok, stable_ok, index)
