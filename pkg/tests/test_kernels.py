import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from raduls.kernels import (
    BufferSet,
    buffered_radix_split,
    build_histogram,
    equal_chunks,
    exclusive_prefix_sum,
    lane_records,
    linear_chunks,
    radix_split,
)
from raduls.records import RecordLayout

from conftest import LAYOUTS, random_records

L16 = RecordLayout(16, 8)


def naive_histogram(recs, byte_index, key_size):
    counts = [0] * 256
    for r in recs:
        counts[int(r[key_size - 1 - byte_index])] += 1
    return counts


def stable_digit_oracle(recs, byte_index, key_size):
    digits = recs[:, key_size - 1 - byte_index]
    order = sorted(range(len(recs)), key=lambda i: (digits[i], i))
    return recs[order]


# -- histogram / prefix sum -------------------------------------------------

def test_histogram_empty():
    assert not build_histogram(np.empty((0, 16), np.uint8), 3, 8).any()


def test_histogram_one_of_each():
    recs = np.zeros((256, 16), np.uint8)
    recs[:, 7] = np.arange(256)
    assert np.array_equal(build_histogram(recs, 0, 8), np.ones(256))


@pytest.mark.parametrize("byte_index", [0, 3, 7])
def test_histogram_matches_naive_count(rng, byte_index):
    recs = random_records(rng, 10_000, L16)
    assert list(build_histogram(recs, byte_index, 8)) == naive_histogram(recs, byte_index, 8)


def test_prefix_sum_zero():
    assert not exclusive_prefix_sum(np.zeros(256, np.int64)).any()


def test_prefix_sum_example():
    counts = np.zeros(256, np.int64)
    counts[0], counts[2] = 3, 2
    assert list(exclusive_prefix_sum(counts)) == [0, 3, 3] + [5] * 253


def test_prefix_sum_matches_fold(rng):
    counts = rng.integers(0, 1000, 256)
    offsets = exclusive_prefix_sum(counts)
    acc = 0
    for d in range(256):
        assert offsets[d] == acc
        acc += counts[d]
    assert offsets[255] + counts[255] == counts.sum()


# -- radix_split ---------------------------------------------------------------

def test_radix_split_grouped_input_unchanged(rng):
    recs = random_records(rng, 500, L16)
    recs = recs[np.argsort(recs[:, 7], kind="stable")]
    dst = np.empty_like(recs)
    radix_split(recs, dst, 0, 8)
    assert np.array_equal(dst, recs)


def test_radix_split_single_record(rng):
    recs = random_records(rng, 1, L16)
    dst = np.empty_like(recs)
    bins = radix_split(recs, dst, 4, 8)
    assert np.array_equal(dst, recs)
    assert sum(b.size > 0 for b in bins) == 1


@pytest.mark.parametrize("layout", LAYOUTS, ids=str)
def test_radix_split_matches_stable_oracle(rng, layout):
    recs = random_records(rng, 50_000, layout, key_alphabet=40)
    byte_index = int(rng.integers(0, layout.key_size))
    dst = np.empty_like(recs)
    bins = radix_split(recs, dst, byte_index, layout.key_size, parity=0)
    assert np.array_equal(dst, stable_digit_oracle(recs, byte_index, layout.key_size))
    # bins tile dst in digit order, carry the next byte and flipped parity
    assert bins[0].start == 0 and bins[-1].end == len(recs)
    for d, b in enumerate(bins):
        assert b.next_byte == byte_index - 1 and b.parity == 1
        assert (dst[b.start:b.end, layout.key_size - 1 - byte_index] == d).all()
        if d:
            assert bins[d - 1].end == b.start


def test_radix_split_rejects_overlap():
    recs = np.zeros((10, 16), np.uint8)
    with pytest.raises(ValueError):
        radix_split(recs, recs, 0, 8)


# -- buffered split --------------------------------------------------------------

@given(n=st.integers(0, 3000), byte_index=st.integers(0, 7), seed=st.integers(0, 2**32),
       chunks=st.integers(1, 40), lane=st.sampled_from([64, 128, 256, 1024]))
@settings(max_examples=60, deadline=None)
def test_buffered_single_thread_equals_plain(n, byte_index, seed, chunks, lane):
    recs = random_records(np.random.default_rng(seed), n, L16, key_alphabet=7)
    plain = np.empty_like(recs)
    buffered = np.empty_like(recs)
    radix_split(recs, plain, byte_index, 8)
    buffered_radix_split(recs, buffered, byte_index, 8, threads=1, chunks=chunks, buffer_bytes=lane)
    assert np.array_equal(plain, buffered)


def test_buffered_identical_keys_is_identity(rng):
    recs = random_records(rng, 5000, L16)
    recs[:, :8] = 42
    dst = np.empty_like(recs)
    bins = buffered_radix_split(recs, dst, 7, 8, threads=4)
    assert np.array_equal(dst, recs)
    assert [b.size for b in bins if b.size] == [5000]


def test_buffered_million_records_eight_threads(rng):
    layout = RecordLayout(16, 8)
    recs = random_records(rng, 1_000_000, layout)
    plain = np.empty_like(recs)
    buffered = np.empty_like(recs)
    radix_split(recs, plain, 7, 8)
    buffered_radix_split(recs, buffered, 7, 8, threads=8)
    assert np.array_equal(plain, buffered)


@pytest.mark.parametrize("layout", LAYOUTS, ids=str)
@pytest.mark.parametrize("threads", [2, 3, 8])
def test_buffered_parallel_stable_all_layouts(rng, layout, threads):
    recs = random_records(rng, 20_000, layout, key_alphabet=5)
    plain = np.empty_like(recs)
    buffered = np.empty_like(recs)
    radix_split(recs, plain, 0, layout.key_size)
    buffered_radix_split(recs, buffered, 0, layout.key_size, threads=threads, buffer_bytes=64)
    assert np.array_equal(plain, buffered)


def test_buffered_explicit_chunks_validated():
    recs = np.zeros((10, 16), np.uint8)
    with pytest.raises(ValueError):
        buffered_radix_split(recs, np.empty_like(recs), 0, 8, chunks=[0, 5, 9])


# -- chunking / buffers ----------------------------------------------------------

@pytest.mark.parametrize("n,threads", [(0, 1), (10, 4), (1000, 1), (123_457, 3), (10**7, 8)])
def test_linear_chunks_cover_and_grow(n, threads):
    bounds = linear_chunks(n, threads)
    sizes = np.diff(bounds)
    assert len(sizes) == 8 * threads
    assert bounds[0] == 0 and bounds[-1] == n
    assert (sizes >= 0).all()
    first = n / (64 * threads)
    assert sizes[0] == int(first)
    # all but the remainder-absorbing last chunk are non-decreasing
    assert (np.diff(sizes[:-1]) >= 0).all()


def test_linear_chunks_common_difference():
    n, threads = 10**8, 4
    c = 8 * threads
    step = 7 * n / (4 * c * (c - 1))
    sizes = np.diff(linear_chunks(n, threads))
    expected = np.floor(n / (64 * threads) + step * np.arange(c))
    assert np.array_equal(sizes[:-1], expected[:-1])
    assert abs(sizes[-1] - expected[-1]) <= c


def test_equal_chunks():
    assert list(equal_chunks(10, 4)) == [0, 2, 5, 7, 10]


def test_lane_records():
    assert lane_records(256, 16) == 16
    assert lane_records(64, 32) == 2
    assert lane_records(64, 24) == 2
    with pytest.raises(ValueError):
        lane_records(100, 16)


def test_buffer_set_shape():
    bs = BufferSet(record_words=3, capacity=5)
    assert bs.lanes.shape == (256, 5, 3)
    assert not bs.fill.any()
