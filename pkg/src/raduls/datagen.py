"""Deterministic record generation and raw record file I/O.

Streams come from numpy's PCG64. Records are generated in shards of
``SHARD_RECORDS``; shard ``k`` draws from ``SeedSequence(seed, spawn_key=(k,))``
so the output depends only on the spec, never on how shards are scheduled.

Zipf keys: a rank ``r`` in ``[1, universe]`` is drawn by inverse CDF, then
passed through the splitmix64 finalizer (a bijection on 64-bit words). An
8-byte key is ``mix64(r)``; a 16-byte key is ``mix64(2r) || mix64(2r + 1)``.
Keys are written big-endian. The first payload word is the record index
(little-endian); further payload words are ``mix64(index ^ 0x5bd1e995 * w)``
for payload word ``w``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .records import RecordFormatError, RecordLayout, empty_records

SHARD_RECORDS = 1 << 20
MAX_UNIVERSE = 1 << 26
DISTRIBUTIONS = ("uniform", "zipf")


@dataclass(frozen=True)
class GenSpec:
    n: int
    layout: RecordLayout = field(default_factory=RecordLayout)
    distribution: str = "uniform"
    theta: float = 0.75
    universe: int = 1 << 24
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.distribution == "zipf":
            if self.theta <= 0:
                raise ValueError("zipf theta must be positive")
            if not 1 <= self.universe <= MAX_UNIVERSE:
                raise ValueError(f"universe must be in [1, {MAX_UNIVERSE}]")


def mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; bijective on uint64."""
    x = np.asarray(x, dtype=np.uint64)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@lru_cache(maxsize=4)
def zipf_cdf(universe: int, theta: float) -> np.ndarray:
    weights = np.arange(1, universe + 1, dtype=np.float64) ** -theta
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return cdf


def zipf_key_words(ranks: np.ndarray, key_size: int) -> list[np.ndarray]:
    """Key value words (most significant first) for Zipf ranks."""
    ranks = ranks.astype(np.uint64)
    if key_size == 8:
        return [mix64(ranks)]
    twice = ranks * np.uint64(2)
    return [mix64(twice), mix64(twice + np.uint64(1))]


def _put_be(out: np.ndarray, col: int, values: np.ndarray) -> None:
    out[:, col:col + 8] = values.astype(">u8").view(np.uint8).reshape(-1, 8)


def _fill_shard(out: np.ndarray, spec: GenSpec, shard: int, first: int) -> None:
    m = len(out)
    layout = spec.layout
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(shard,))))
    if spec.distribution == "uniform":
        out[:, :layout.key_size] = rng.integers(0, 256, size=(m, layout.key_size), dtype=np.uint8)
    else:
        cdf = zipf_cdf(spec.universe, spec.theta)
        ranks = np.searchsorted(cdf, rng.random(m), side="right") + 1
        np.minimum(ranks, spec.universe, out=ranks)
        for j, words in enumerate(zipf_key_words(ranks, layout.key_size)):
            _put_be(out, 8 * j, words)
    index = np.arange(first, first + m, dtype=np.uint64)
    for w in range(layout.key_words, layout.words):
        if w == layout.key_words:
            payload = index
        else:
            payload = mix64(index ^ np.uint64(0x5BD1E995 * w))
        out[:, 8 * w:8 * w + 8] = payload.astype("<u8").view(np.uint8).reshape(-1, 8)


def generate(spec: GenSpec, threads: int | None = None) -> np.ndarray:
    """Records of shape ``(n, record_size)``; same spec gives identical bytes."""
    out = empty_records(spec.n, spec.layout)
    starts = range(0, spec.n, SHARD_RECORDS)
    jobs = [(k, s) for k, s in enumerate(starts)]

    def run(job):
        k, s = job
        _fill_shard(out[s:s + SHARD_RECORDS], spec, k, s)

    if spec.distribution == "zipf" and jobs:
        zipf_cdf(spec.universe, spec.theta)
    workers = threads or min(len(jobs), os.cpu_count() or 1)
    if workers <= 1:
        for job in jobs:
            run(job)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, jobs))
    return out


def save_file(path, records: np.ndarray) -> None:
    np.ascontiguousarray(records, dtype=np.uint8).tofile(path)


def load_file(path, layout: RecordLayout) -> np.ndarray:
    size = os.path.getsize(path)
    if size % layout.record_size:
        raise RecordFormatError(
            f"{path}: {size} bytes is not a multiple of record_size={layout.record_size}"
        )
    data = np.fromfile(path, dtype=np.uint8)
    return data.reshape(-1, layout.record_size)
