"""Parallel MSD radix sort driver.

The sort runs in three procedures:

* the first pass splits the whole array on the most significant byte with
  all threads, then classifies the bins as big or small;
* big bins are split again with a thread group sized to their share of the
  data, recursing while children stay big;
* small bins become tasks in priority queues served by worker threads, each
  task finishing its bin with single-threaded splits and comparison sorts.

Records move between the caller's array and one auxiliary array; every
finished range is copied back so the caller's array holds the result.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from .kernels import (
    DEFAULT_LANE_BYTES,
    Bin,
    lane_records,
    linear_chunks,
    parallel_buffered_split,
    split_buffered,
    split_plain,
)
from .records import (
    LITTLE_ENDIAN_HOST,
    RecordLayout,
    as_records,
    as_words,
    empty_records,
    word_and_shift,
)
from .small_sorts import TinyPolicy, comparison_sort_words

log = logging.getLogger(__name__)

_LITTLE = LITTLE_ENDIAN_HOST


@dataclass
class SchedulerConfig:
    threads: int = 1
    l2_cache_bytes: int = 262_144
    big_bin_threshold_factor: Fraction = Fraction(2, 3)
    queue_cutoff_divisor: int = 4096
    chunk_multiplier: int = 8
    first_chunk_divisor: int = 64
    buffer_bytes: int = DEFAULT_LANE_BYTES
    policy: TinyPolicy = field(default_factory=TinyPolicy)

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        for name in ("l2_cache_bytes", "queue_cutoff_divisor", "chunk_multiplier", "first_chunk_divisor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.big_bin_threshold_factor <= 0:
            raise ValueError("big_bin_threshold_factor must be positive")
        self.big_bin_threshold_factor = Fraction(self.big_bin_threshold_factor)


# --------------------------------------------------------------------------
# pure policy functions

def is_big(size: int, n: int, threads: int, factor=Fraction(2, 3)) -> bool:
    """Big iff ``size > factor * n / threads`` (exact rational comparison)."""
    return size * threads > Fraction(factor) * n


def classify_bins(bins, n: int, threads: int, factor=Fraction(2, 3)):
    """Split ``bins`` into ``(small, big)`` lists, both in digit order."""
    small, big = [], []
    for b in bins:
        (big if is_big(b.size, n, threads, factor) else small).append(b)
    return small, big


def split_threads(n_big: int, n: int, threads: int) -> tuple[int, int]:
    """Threads for big-bin processing and for the small-bin queue.

    ``T_big = min(T, ceil(1.25 * T * n_big / n))``, at least 1 when any
    record is in a big bin.
    """
    if n_big <= 0:
        return 0, threads
    t_big = -(-5 * threads * n_big // (4 * n))
    t_big = max(1, min(threads, t_big))
    return t_big, threads - t_big


def too_small_for_queue(size: int, n: int, divisor: int = 4096) -> bool:
    """Bins below ``n / divisor`` are recursed into instead of queued."""
    return size * divisor < n


# --------------------------------------------------------------------------
# task queue

@dataclass(frozen=True)
class Task:
    bin: Bin
    parent_size: int = 0

    @property
    def priority(self) -> int:
        return self.bin.size


class TaskQueue:
    """Blocking max-priority queue of tasks.

    ``pop`` returns the largest task, or ``None`` once the queue is closed and
    no popped task is still running (a running task may enqueue children).
    Callers report completion of every popped task with ``task_done``.
    """

    def __init__(self):
        self._heap = []
        self._seq = itertools.count()
        self._cond = threading.Condition()
        self._closed = False
        self._running = 0
        self.puts = 0

    def put(self, task: Task) -> None:
        with self._cond:
            heapq.heappush(self._heap, (-task.priority, next(self._seq), task))
            self.puts += 1
            self._cond.notify()

    def pop(self) -> Task | None:
        with self._cond:
            while not self._heap:
                if self._closed and self._running == 0:
                    return None
                self._cond.wait()
            self._running += 1
            return heapq.heappop(self._heap)[2]

    def task_done(self) -> None:
        with self._cond:
            self._running -= 1
            if self._running == 0 and not self._heap:
                self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def __len__(self):
        with self._cond:
            return len(self._heap)


def process_bins(queues, handler) -> int:
    """Worker loop: drain each queue in turn, running ``handler(task, queue)``.

    Returns the number of tasks handled.
    """
    handled = 0
    for queue in queues:
        while (task := queue.pop()) is not None:
            try:
                handler(task, queue)
                handled += 1
            finally:
                queue.task_done()
    return handled


# --------------------------------------------------------------------------
# small-bin task body (numba)

_MASK = np.uint64(0xFF)


@njit(inline="always")
def _digit_location(byte, key_size):
    pos = key_size - 1 - byte
    within = pos & 7
    if _LITTLE:
        return pos >> 3, np.uint64(within * 8)
    return pos >> 3, np.uint64((7 - within) * 8)


@njit(inline="always")
def _tiny(size, parent, tiny, nf_limit, narrowed):
    if parent > nf_limit * size:
        return size < narrowed
    return size < tiny


@njit(nogil=True, cache=True)
def _finish(A, B, start, end, parity):
    if parity == 1:
        for i in range(start, end):
            for w in range(A.shape[1]):
                A[i, w] = B[i, w]


@njit(nogil=True, cache=True)
def msd_task(
    A, B, start, end, byte, parity, parent, key_size, n_total, queue_divisor,
    cache_half_bytes, tiny, nf_limit, narrowed, insertion, shell, lanes, fill, out,
):
    """Sort one small bin, recursing inline into children below the queue cutoff.

    Children too large for inline recursion are written to ``out`` as rows
    ``(start, end, byte, parity, parent)``; returns how many.
    """
    key_words = key_size // 8
    record_bytes = A.shape[1] * 8
    size = end - start
    if size == 0:
        return 0
    tmp = np.empty((1, A.shape[1]), dtype=A.dtype)
    if _tiny(size, parent, tiny, nf_limit, narrowed):
        X = A if parity == 0 else B
        comparison_sort_words(X, start, end, key_words, insertion, shell, tmp)
        _finish(A, B, start, end, parity)
        return 0

    n_out = 0
    hist = np.empty(256, dtype=np.int64)
    stack = np.empty((key_size * 256 + 1, 5), dtype=np.int64)
    stack[0, 0] = start
    stack[0, 1] = end
    stack[0, 2] = byte
    stack[0, 3] = parity
    stack[0, 4] = parent
    top = 1
    while top > 0:
        top -= 1
        s = stack[top, 0]
        e = stack[top, 1]
        b = stack[top, 2]
        par = stack[top, 3]
        src = A if par == 0 else B
        dst = B if par == 0 else A
        word, shift = _digit_location(b, key_size)
        if (e - s) * record_bytes <= cache_half_bytes:
            split_plain(src, dst, s, e, word, shift, hist)
        else:
            split_buffered(src, dst, s, e, word, shift, hist, lanes, fill)
        child_par = 1 - par
        if b == 0:
            _finish(A, B, s, e, child_par)
            continue
        lo = s
        finished = False
        for d in range(256):
            c = hist[d]
            if c == 0:
                continue
            hi = lo + c
            if _tiny(c, e - s, tiny, nf_limit, narrowed):
                comparison_sort_words(dst, lo, hi, key_words, insertion, shell, tmp)
                finished = True
            elif c * queue_divisor < n_total:
                stack[top, 0] = lo
                stack[top, 1] = hi
                stack[top, 2] = b - 1
                stack[top, 3] = child_par
                stack[top, 4] = e - s
                top += 1
            else:
                out[n_out, 0] = lo
                out[n_out, 1] = hi
                out[n_out, 2] = b - 1
                out[n_out, 3] = child_par
                out[n_out, 4] = e - s
                n_out += 1
            lo = hi
        # One bulk copy-back for the tiny children. Ranges of children still
        # pending are overwritten again by their own split, so copying them
        # too is harmless.
        if finished:
            _finish(A, B, s, e, child_par)
    return n_out


# --------------------------------------------------------------------------
# driver

class MSDSorter:
    """State of one sort: the two working arrays, global sizes and queues."""

    def __init__(self, records: np.ndarray, layout: RecordLayout, cfg: SchedulerConfig):
        self.layout = layout
        self.cfg = cfg
        self.n = len(records)
        self.threads = cfg.threads
        self.A = as_words(records)
        self.B = as_words(empty_records(self.n, layout))
        self.capacity = lane_records(cfg.buffer_bytes, layout.record_size)
        self.small_queue = TaskQueue()
        self.big_queue = TaskQueue()
        self.msd_calls = 0
        self._calls_lock = threading.Lock()
        self._errors = []
        self.stats = {}

    # -- helpers ---------------------------------------------------------

    def _arrays(self, parity):
        return (self.A, self.B) if parity == 0 else (self.B, self.A)

    def _finish(self, b: Bin):
        if b.parity == 1 and b.size:
            self.A[b.start:b.end] = self.B[b.start:b.end]

    def _split_parallel(self, b: Bin, byte: int, threads: int) -> list[Bin]:
        src, dst = self._arrays(b.parity)
        word, shift = word_and_shift(byte, self.layout.key_size)
        bounds = linear_chunks(
            b.size, threads, self.cfg.chunk_multiplier, self.cfg.first_chunk_divisor
        )
        hist = parallel_buffered_split(
            src, dst, b.start, b.end, word, shift, bounds, threads, self.capacity
        )
        ends = np.cumsum(hist) + b.start
        return [
            Bin(int(e - h), int(e), byte - 1, 1 - b.parity)
            for e, h in zip(ends, hist)
        ]

    def is_big(self, b: Bin) -> bool:
        return is_big(b.size, self.n, self.threads, self.cfg.big_bin_threshold_factor)

    # -- procedures ------------------------------------------------------

    def sort(self):
        if self.n <= 1:
            return
        self.first_pass(self.layout.key_size - 1)

    def first_pass(self, current_byte: int):
        root = Bin(0, self.n, current_byte, 0)
        bins = self._split_parallel(root, current_byte, self.threads)
        if current_byte == 0:
            for b in bins:
                self._finish(b)
            return
        small, big = classify_bins(
            bins, self.n, self.threads, self.cfg.big_bin_threshold_factor
        )
        for b in small:
            if b.size:
                self.small_queue.put(Task(b, 0))
        self.small_queue.close()
        n_big = sum(b.size for b in big)
        t_big, t_small = split_threads(n_big, self.n, self.threads)
        self.stats.update(big_bins=len(big), small_bins=len(small), n_big=n_big,
                          t_big=t_big, t_small=t_small)
        log.debug("first pass: %d big bins (%d records), T_big=%d T_small=%d",
                  len(big), n_big, t_big, t_small)

        workers = [
            threading.Thread(target=self.worker, args=([self.small_queue, self.big_queue],))
            for _ in range(t_small)
        ]
        for w in workers:
            w.start()
        try:
            for b in big:
                self.big_partition_pass(b, current_byte - 1, t_big)
        finally:
            self.big_queue.close()
        if t_big:
            late = [
                threading.Thread(target=self.worker, args=([self.big_queue, self.small_queue],))
                for _ in range(t_big - 1)
            ]
            for w in late:
                w.start()
            workers += late
            self.worker([self.big_queue, self.small_queue])
        for w in workers:
            w.join()
        if self._errors:
            raise self._errors[0]

    def big_partition_pass(self, b: Bin, current_byte: int, threads: int):
        self.stats["big_splits"] = self.stats.get("big_splits", 0) + 1
        children = self._split_parallel(b, current_byte, threads)
        if current_byte == 0:
            for c in children:
                self._finish(c)
            return
        for c in children:
            if self.is_big(c):
                self.big_partition_pass(c, current_byte - 1, threads)
            elif c.size:
                self.big_queue.put(Task(c, b.size))

    def worker(self, queues):
        lanes = np.empty((256, self.capacity, self.layout.words), dtype=np.uint64)
        fill = np.zeros(256, dtype=np.int64)
        out = np.empty((256, 5), dtype=np.int64)

        def handle(task, queue):
            for child in self.msd_radix_bins(task, lanes, fill, out):
                queue.put(child)

        try:
            process_bins(queues, handle)
        except BaseException as exc:  # surfaced by first_pass after join
            self._errors.append(exc)
            for q in (self.small_queue, self.big_queue):
                q.close()

    def msd_radix_bins(self, task: Task, lanes=None, fill=None, out=None) -> list[Task]:
        """Process one small bin; returns the child tasks that must be queued."""
        if lanes is None:
            lanes = np.empty((256, self.capacity, self.layout.words), dtype=np.uint64)
            fill = np.zeros(256, dtype=np.int64)
            out = np.empty((256, 5), dtype=np.int64)
        with self._calls_lock:
            self.msd_calls += 1
        b = task.bin
        policy = self.cfg.policy
        key_size = self.layout.key_size
        n_out = msd_task(
            self.A, self.B, b.start, b.end, b.next_byte, b.parity, task.parent_size,
            key_size, self.n, self.cfg.queue_cutoff_divisor,
            self.cfg.l2_cache_bytes // 2,
            policy.tiny_threshold, policy.narrowing_factor_limit,
            policy.narrowed_tiny_threshold, policy.insertion_threshold,
            policy.intro_vs_shell_threshold(key_size),
            lanes, fill, out,
        )
        return [
            Task(Bin(int(r[0]), int(r[1]), int(r[2]), int(r[3])), int(r[4]))
            for r in out[:n_out]
        ]


def sort(data, layout: RecordLayout = RecordLayout(), cfg: SchedulerConfig | None = None):
    """Sort fixed-size records in place by key and return them.

    ``data`` is a uint8 array, either flat or shaped ``(n, record_size)``.
    """
    cfg = cfg or SchedulerConfig()
    records = as_records(data, layout)
    if len(records) <= 1:
        return records
    work = records
    if not (records.flags.c_contiguous and records.flags.aligned and records.ctypes.data % 8 == 0):
        work = empty_records(len(records), layout)
        work[:] = records
    MSDSorter(work, layout, cfg).sort()
    if work is not records:
        records[:] = work
    return records
