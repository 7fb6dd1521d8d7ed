"""Backend kernels against the sort oracle, plus their side contracts."""

from collections import Counter

import numpy as np
import pytest

from dtopk import data
from dtopk.core import InvalidK, WorkloadStats
from dtopk.kernels import (
    RadixState,
    bitonic_topk,
    bucket_topk,
    heap_topk,
    radix_topk,
    sort_and_choose,
)
from tests.conftest import assert_multiset_equal, topk_oracle


def is_multiset_superset(big, small):
    cb, cs = Counter(np.asarray(big).tolist()), Counter(np.asarray(small).tolist())
    return all(cb[x] >= c for x, c in cs.items())


# ---------------------------------------------------------------------------
# worked 16-element example
# ---------------------------------------------------------------------------


class TestFigureExamples:
    def test_radix_top2(self, figure_vector):
        selected, _, threshold = radix_topk(figure_vector, 2)
        assert_multiset_equal(selected, [3012, 3210])
        assert threshold == 3012

    def test_bucket_four_way_refinement(self, figure_vector):
        # with 4 buckets over [101, 3210], the top bucket spans values at or
        # above 2432.75 and holds exactly 4 of the 16 elements; the second
        # iteration recurses into it
        trace = []
        selected, _, threshold = bucket_topk(figure_vector, 2, num_buckets=4, trace=trace)
        assert_multiset_equal(selected, [3012, 3210])
        assert threshold == 3012
        lo, hi, count = trace[1]
        assert (lo, hi, count) == (2433, 3210, 4)

    def test_bitonic_top2(self, figure_vector):
        trace = []
        selected, _, _ = bitonic_topk(figure_vector, 2, trace=trace)
        assert selected.tolist() == [3210, 3012]
        assert trace == [16, 8, 4, 2]

    def test_oracles(self, figure_vector):
        assert sort_and_choose(figure_vector, 2).values.tolist() == [3210, 3012]
        assert heap_topk(figure_vector, 2).values.tolist() == [3210, 3012]


# ---------------------------------------------------------------------------
# oracle equivalence
# ---------------------------------------------------------------------------


def _instances(rng):
    yield data.gen_uniform(10_000, 5), 137
    yield data.gen_normal(8_192, 5), 200          # massive duplication
    yield data.gen_customized(2**20, 2**10, 5), 2**10
    yield rng.integers(0, 4, 5_000, dtype=np.uint32), 1_000
    yield np.full(300, 7, dtype=np.uint32), 55    # constant vector


@pytest.mark.parametrize("backend", [radix_topk, bucket_topk])
def test_backend_equals_sort_oracle(backend, rng):
    for v, k in _instances(rng):
        selected, _, threshold = backend(v, k)
        expected = topk_oracle(v, k)
        assert_multiset_equal(selected, expected)
        assert threshold == int(expected[0])


def test_bitonic_equals_sort_oracle(rng):
    for v, _ in _instances(rng):
        for k in (1, 64, 512):
            if k > v.size:
                continue
            selected, _, _ = bitonic_topk(v, k)
            assert_multiset_equal(selected, topk_oracle(v, k))


def test_cross_oracle_agreement(rng):
    for v, k in _instances(rng):
        assert_multiset_equal(sort_and_choose(v, k).values, heap_topk(v, k).values)


@pytest.mark.parametrize("backend", [radix_topk, bucket_topk])
def test_k_equals_n_returns_everything(backend, figure_vector):
    selected, _, threshold = backend(figure_vector, figure_vector.size)
    assert_multiset_equal(selected, figure_vector)
    assert threshold == 101


def test_bucket_constant_vector_one_iteration():
    v = np.full(1000, 42, dtype=np.uint32)
    trace = []
    selected, _, threshold = bucket_topk(v, 17, trace=trace)
    assert threshold == 42
    assert selected.size == 17
    assert len(trace) == 1  # min == max after the initial scan


# ---------------------------------------------------------------------------
# skip-last relaxation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("backend", [radix_topk, bucket_topk])
def test_skip_last_superset(backend, rng):
    for v, k in _instances(rng):
        exact, _, _ = backend(v, k)
        relaxed, _, lower = backend(v, k, skip_last=True)
        assert relaxed.size >= k
        assert int(relaxed.min()) == lower
        assert is_multiset_superset(relaxed, exact)


def test_radix_skip_last_bucket_lower_bound(rng):
    # the relaxed threshold never exceeds the true k-th value and the
    # selection is exactly the elements at or above it
    for _ in range(20):
        v = rng.integers(0, 2**32, 4_096, dtype=np.uint32)
        k = int(rng.integers(1, 4_096))
        relaxed, _, lower = radix_topk(v, k, skip_last=True)
        kth = int(topk_oracle(v, k)[0])
        assert lower <= kth
        assert relaxed.size == int(np.count_nonzero(v >= lower))


# ---------------------------------------------------------------------------
# radix internals
# ---------------------------------------------------------------------------


def test_radix_qualification_matches_kth_prefix(rng):
    # after each pass, the qualification predicate must keep exactly the
    # elements sharing the determined high bits with the true k-th value
    for _ in range(25):
        n = int(rng.integers(2, 4_096))
        v = rng.integers(0, 2**32, n, dtype=np.uint32)
        k = int(rng.integers(1, n + 1))
        kth = int(topk_oracle(v, k)[0])
        states = []
        radix_topk(v, k, states=states)
        assert len(states) == 4
        for state in states:
            expected = (v & np.uint32(state.prefix_mask)) == np.uint32(kth & state.prefix_mask)
            got = (v & np.uint32(state.prefix_mask)) == np.uint32(state.prefix_bits)
            np.testing.assert_array_equal(got, expected)
            assert state.prefix_mask == 0xFFFFFFFF >> (32 - 8 * state.pass_index) << (32 - 8 * state.pass_index)


def test_radix_state_qualifies():
    state = RadixState(prefix_bits=0xAB000000, prefix_mask=0xFF000000, pass_index=1)
    assert state.qualifies(0xAB123456)
    assert not state.qualifies(0xAC123456)


def test_radix_tie_extraction_is_deterministic():
    v = np.array([9, 5, 5, 5, 9, 5], dtype=np.uint32)
    selected, _, threshold = radix_topk(v, 3)
    assert threshold == 5
    assert selected.tolist() == [9, 9, 5]  # strictly-greater first, ties in scan order


@pytest.mark.parametrize("digit_bits", [4, 8, 16])
def test_radix_digit_width_configurable(digit_bits, rng):
    v = rng.integers(0, 2**32, 3_000, dtype=np.uint32)
    selected, _, threshold = radix_topk(v, 99, digit_bits=digit_bits)
    assert_multiset_equal(selected, topk_oracle(v, 99))
    assert threshold == int(topk_oracle(v, 99)[0])
    with pytest.raises(ValueError):
        radix_topk(v, 9, digit_bits=5)


# ---------------------------------------------------------------------------
# bitonic structure
# ---------------------------------------------------------------------------


def test_bitonic_halving_trace(rng):
    v = rng.integers(0, 2**32, 2**16, dtype=np.uint32)
    trace = []
    selected, _, _ = bitonic_topk(v, 64, trace=trace)
    assert trace == [2**16 >> r for r in range(11)]
    assert_multiset_equal(selected, topk_oracle(v, 64))


def test_bitonic_identity_when_k_equals_n(rng):
    v = rng.integers(0, 2**32, 128, dtype=np.uint32)
    trace = []
    selected, _, _ = bitonic_topk(v, 128, trace=trace)
    assert trace == [128]
    assert_multiset_equal(selected, v)


def test_bitonic_padding_never_displaces_real_keys(rng):
    v = rng.integers(1, 2**32, 300, dtype=np.uint32)  # not a power of two
    selected, _, _ = bitonic_topk(v, 16)
    assert_multiset_equal(selected, topk_oracle(v, 16))
    # padding zeros may only surface when fewer than k nonzero elements exist
    small = np.array([0, 0, 5], dtype=np.uint32)
    selected, _, _ = bitonic_topk(small, 2)
    assert selected.tolist() == [5, 0]


def test_bitonic_rejects_non_power_of_two_k():
    with pytest.raises(InvalidK):
        bitonic_topk(np.arange(16, dtype=np.uint32), 3)


# ---------------------------------------------------------------------------
# tags and errors
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "backend,kwargs",
    [(radix_topk, {}), (radix_topk, {"skip_last": True}), (bucket_topk, {}), (bitonic_topk, {})],
)
def test_tags_survive_selection(backend, kwargs, rng):
    v = rng.integers(0, 1000, 2_000, dtype=np.uint32)
    tags = rng.integers(0, 50, 2_000, dtype=np.uint32)
    k = 64
    selected, out_tags, _ = backend(v, k, tags=tags, **kwargs)
    pairs_in = Counter(zip(v.tolist(), tags.tolist()))
    pairs_out = Counter(zip(selected.tolist(), out_tags.tolist()))
    assert all(pairs_in[p] >= c for p, c in pairs_out.items())


@pytest.mark.parametrize("backend", [radix_topk, bucket_topk, bitonic_topk, sort_and_choose, heap_topk])
def test_invalid_k_rejected(backend, figure_vector):
    with pytest.raises(InvalidK):
        backend(figure_vector, 17)
    with pytest.raises(InvalidK):
        backend(figure_vector, 0)


def test_read_counters_count_full_rescans(rng):
    v = rng.integers(0, 2**32, 10_000, dtype=np.uint32)
    stats = WorkloadStats()
    radix_topk(v, 100, stats=stats)
    assert stats.elements_read == 5 * v.size  # 4 histogram passes + extraction
    stats = WorkloadStats()
    radix_topk(v, 100, skip_last=True, stats=stats)
    assert stats.elements_read == 4 * v.size
