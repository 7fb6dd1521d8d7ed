"""Shared fixtures: the 16-element worked-example vector and RNG helpers."""

import numpy as np
import pytest

# Canonical 16-element example (min 101, max 3210), four subranges of four:
#   subrange 0 max 3012, subrange 1 max 2313,
#   subrange 2 top two {3210, 3000}, subrange 3 max 2321.
# Exactly four elements lie in the top quarter of the value range.
FIGURE_VECTOR = np.array(
    [
        101, 2001, 3012, 1323,
        2313, 878, 1500, 450,
        3000, 1002, 3210, 2500,
        2321, 700, 1900, 1100,
    ],
    dtype=np.uint32,
)


@pytest.fixture
def figure_vector():
    return FIGURE_VECTOR.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def assert_multiset_equal(got, expected):
    got = np.sort(np.asarray(got).ravel())
    expected = np.sort(np.asarray(expected).ravel())
    np.testing.assert_array_equal(got, expected)


def topk_oracle(v, k):
    """Reference answer: the k largest values, ascending."""
    return np.sort(np.asarray(v))[-k:]
