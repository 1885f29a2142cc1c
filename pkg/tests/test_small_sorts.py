import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from raduls.records import RecordLayout
from raduls.small_sorts import (
    TinyPolicy,
    comparison_sort,
    insertion_sort,
    introspective_sort,
    is_tiny,
    select_sorter,
    shell_sort,
)
from raduls.verify import oracle_sort

from conftest import random_records

L = RecordLayout(16, 8)
L_WIDE = RecordLayout(32, 16)
SORTERS = {
    "insertion": insertion_sort,
    "shell": shell_sort,
    "introsort": introspective_sort,
}


def keys(recs, key_size):
    return [bytes(r[:key_size]) for r in recs]


def test_is_tiny_threshold_examples():
    assert is_tiny(300, 1000)          # factor 3.33 <= 16, threshold 384
    assert not is_tiny(100, 10_000)    # factor 100 > 16, threshold 32
    assert is_tiny(0, 0)
    assert is_tiny(0, 500)


def test_intro_shell_threshold_in_range():
    p = TinyPolicy()
    assert p.intro_vs_shell_threshold(8) == 140
    assert p.intro_vs_shell_threshold(16) == 180
    for k in (8, 16):
        assert p.insertion_threshold <= p.intro_vs_shell_threshold(k) <= p.tiny_threshold
    assert TinyPolicy(intro_shell_override=120).intro_vs_shell_threshold(16) == 120


@pytest.mark.parametrize("n,key_size,name", [
    (0, 8, "insertion"), (32, 8, "insertion"), (33, 8, "shell"), (140, 8, "shell"),
    (141, 8, "introsort"), (180, 16, "shell"), (181, 16, "introsort"), (383, 16, "introsort"),
])
def test_select_sorter(n, key_size, name):
    assert select_sorter(n, key_size) == name


@pytest.mark.parametrize("name", SORTERS)
@pytest.mark.parametrize("n", [0, 1])
def test_trivial_sizes_unchanged(rng, name, n):
    recs = random_records(rng, n, L)
    before = recs.copy()
    SORTERS[name](recs, 8)
    assert np.array_equal(recs, before)


@pytest.mark.parametrize("name", SORTERS)
def test_sorted_input_unchanged(rng, name):
    recs = oracle_sort(random_records(rng, 300, L), 8)
    before = recs.copy()
    SORTERS[name](recs, 8)
    assert keys(recs, 8) == keys(before, 8)


@pytest.mark.parametrize("name,n", [("insertion", 32), ("shell", 150), ("introsort", 383)])
@pytest.mark.parametrize("layout", [L, L_WIDE], ids=str)
def test_random_matches_oracle(rng, name, n, layout):
    recs = random_records(rng, n, layout)
    expected = oracle_sort(recs, layout.key_size)
    SORTERS[name](recs, layout.key_size)
    assert keys(recs, layout.key_size) == keys(expected, layout.key_size)
    assert sorted(map(bytes, recs)) == sorted(map(bytes, expected))


def test_insertion_sort_is_stable(rng):
    recs = random_records(rng, 200, L, key_alphabet=2)
    recs[:, :6] = 0
    expected = oracle_sort(recs, 8)
    insertion_sort(recs, 8)
    assert np.array_equal(recs, expected)


def test_shell_small_is_insertion(rng):
    recs = random_records(rng, 8, L, key_alphabet=3)
    a, b = recs.copy(), recs.copy()
    shell_sort(a, 8)
    insertion_sort(b, 8)
    assert np.array_equal(a, b)


def test_all_equal_keys(rng):
    recs = random_records(rng, 5000, L)
    recs[:, :8] = 7
    payload = sorted(map(bytes, recs))
    heaps = introspective_sort(recs, 8)
    assert heaps == 0
    assert sorted(map(bytes, recs)) == payload
    before = recs.copy()
    shell_sort(recs, 8)
    assert np.array_equal(recs, before)


def test_introsort_two_swapped(rng):
    recs = oracle_sort(random_records(rng, 383, L), 8)
    recs[[10, 200]] = recs[[200, 10]]
    introspective_sort(recs, 8)
    assert keys(recs, 8) == sorted(keys(recs, 8))


def test_introsort_heapsort_guard(rng):
    # with no insertion cutoff the quicksort recursion reaches the depth limit
    # on organ-pipe input, which must be finished by heapsort
    n = 4096
    half = np.arange(n // 2, dtype=np.uint64)
    vals = np.concatenate([half, half[::-1]])
    recs = np.zeros((n, 16), np.uint8)
    recs[:, :8] = vals.astype(">u8").view(np.uint8).reshape(n, 8)
    assert introspective_sort(recs, 8, insertion_threshold=0) > 0
    assert keys(recs, 8) == sorted(keys(recs, 8))


def test_comparison_sort_reverse_383(rng):
    recs = oracle_sort(random_records(rng, 383, L), 8)[::-1].copy()
    comparison_sort(recs, 8)
    assert keys(recs, 8) == sorted(keys(recs, 8))


@given(n=st.integers(0, 10_000), seed=st.integers(0, 2**32), alphabet=st.sampled_from([2, 16, 256]),
       wide=st.booleans(), name=st.sampled_from(sorted(SORTERS)))
@settings(max_examples=40, deadline=None)
def test_sorters_agree_with_reference(n, seed, alphabet, wide, name):
    layout = L_WIDE if wide else L
    if name != "introsort":
        n = min(n, 2000)  # quadratic sorters
    recs = random_records(np.random.default_rng(seed), n, layout, key_alphabet=alphabet)
    expected = oracle_sort(recs, layout.key_size)
    SORTERS[name](recs, layout.key_size)
    assert keys(recs, layout.key_size) == keys(expected, layout.key_size)
