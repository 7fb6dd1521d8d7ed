"""Standalone top-k selection kernels over unsigned 32-bit keys.

Three fast backends plus two exact baselines:

* `radix_topk`    -- in-place MSD radix selection, 8 bits per pass. A
  (prefix_bits, prefix_mask) pair tracks the determined high bits of the
  k-th value; an element is a live candidate iff
  ``(element & prefix_mask) == prefix_bits``. No shrinking candidate
  array is ever materialized: every pass re-scans the input with that
  predicate.
* `bucket_topk`   -- iterative min/max range refinement into equal-width
  value buckets, recursing on the bucket that holds the k-th element.
* `bitonic_topk`  -- merge rounds over bitonic sequences of length 2k,
  halving the live vector each round. Requires power-of-two k.
* `sort_and_choose` / `heap_topk` -- oracles and baselines, never the
  fast path.

All kernels accept an optional parallel `tags` array (opaque payload,
e.g. subrange ids) which is carried through selection untouched, and an
optional WorkloadStats sink for logical read/write accounting.

With `skip_last`, radix and bucket stop one refinement short of pinning
the exact k-th value and return every candidate at or above the lower
edge of the value range known to contain it: a superset of a correct
top-k whose minimum is the returned threshold lower bound.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import InvalidK, TopKResult, WorkloadStats, ensure_vector, is_power_of_two

RADIX_BITS = 8
RADIX_PASSES = 32 // RADIX_BITS
DEFAULT_NUM_BUCKETS = 256


class KeyedEntry(NamedTuple):
    """A selection key with an opaque payload (e.g. a subrange id).

    Selection compares only `value`; the tag rides along untouched.
    """

    value: int
    tag: int


@dataclass
class RadixState:
    """High bits of the k-th value determined so far.

    prefix_mask is always a contiguous high-order mask covering the
    digits fixed by the first pass_index passes; remaining_k counts how
    many of the top k are still sought inside the current prefix class.
    """

    prefix_bits: int = 0
    prefix_mask: int = 0
    pass_index: int = 0
    remaining_k: int = 0

    def qualifies(self, element: int) -> bool:
        return (int(element) & self.prefix_mask) == self.prefix_bits


def _validate(values, k):
    values = ensure_vector(values)
    if k < 1 or k > values.size:
        raise InvalidK(f"k={k} outside [1, {values.size}]")
    return values


def _take(tags, index):
    return None if tags is None else tags[index]


def _extract_exact(values, tags, k, kth, stats):
    """Select the k-element answer once the exact k-th value is known.

    Strictly-greater elements are taken first, then threshold-equal
    elements in scan order until k slots are filled.
    """
    gt_idx = np.flatnonzero(values > kth)
    need = k - gt_idx.size
    eq_idx = np.flatnonzero(values == kth)[:need]
    idx = np.concatenate([gt_idx, eq_idx])
    if stats is not None:
        stats.add_read(values.size)
        stats.add_written(k)
    return values[idx], _take(tags, idx), int(kth)


def _extract_at_least(values, tags, edge, stats):
    """Select every element >= edge; the threshold is their minimum."""
    idx = np.flatnonzero(values >= edge)
    selected = values[idx]
    if stats is not None:
        stats.add_read(values.size)
        stats.add_written(selected.size)
    return selected, _take(tags, idx), int(selected.min())


def radix_topk(values, k, *, skip_last=False, digit_bits=RADIX_BITS, tags=None, stats=None, states=None):
    """MSD radix top-k.

    Args:
        values: uint32 keys.
        k: number of largest elements sought, 1 <= k <= len(values).
        skip_last: omit the final pass; the result is then every
            candidate in or above the 2**digit_bits-wide value bucket of
            the k-th element, and the threshold is that superset's
            minimum.
        digit_bits: digit width per pass; must divide 32. 8 (four
            passes) is the tuned default, other widths are for
            experiments.
        tags: optional payload array carried through selection.
        stats: optional WorkloadStats sink.
        states: optional list collecting a RadixState snapshot per pass.

    Returns:
        (selected_values, selected_tags, threshold_lower_bound); the tags
        slot is None when no tags were given.
    """
    values = _validate(values, k)
    if digit_bits < 1 or 32 % digit_bits:
        raise ValueError(f"digit_bits={digit_bits} must divide 32")
    n = values.size
    state = RadixState(remaining_k=k)
    passes = 32 // digit_bits - (1 if skip_last else 0)
    digit_max = (1 << digit_bits) - 1

    for p in range(passes):
        shift = 32 - digit_bits * (p + 1)
        digits = (values >> np.uint32(shift)) & np.uint32(digit_max)
        if state.prefix_mask:
            qualified = (values & np.uint32(state.prefix_mask)) == np.uint32(state.prefix_bits)
            hist = np.bincount(digits[qualified], minlength=digit_max + 1)
        else:
            hist = np.bincount(digits, minlength=digit_max + 1)
        if stats is not None:
            stats.add_read(n)
        # at_least[d] = number of qualified elements whose digit is >= d
        at_least = np.cumsum(hist[::-1])[::-1]
        digit = int(np.flatnonzero(at_least >= state.remaining_k)[-1])
        above = int(at_least[digit + 1]) if digit < digit_max else 0
        state.remaining_k -= above
        state.prefix_bits |= digit << shift
        state.prefix_mask |= digit_max << shift
        state.pass_index = p + 1
        if states is not None:
            states.append(
                RadixState(state.prefix_bits, state.prefix_mask, state.pass_index, state.remaining_k)
            )

    if skip_last:
        # prefix_bits has its low digit_bits bits clear: the lower edge
        # of the narrowest value bucket known to contain the k-th value.
        return _extract_at_least(values, tags, state.prefix_bits, stats)
    return _extract_exact(values, tags, k, state.prefix_bits, stats)


def bucket_topk(
    values,
    k,
    *,
    num_buckets=DEFAULT_NUM_BUCKETS,
    skip_last=False,
    tags=None,
    stats=None,
    trace=None,
):
    """Bucket top-k by iterative value-range refinement.

    The live range [lo, hi] is split into `num_buckets` equal real-valued
    sub-ranges (the top one closed); each iteration re-scans the input,
    histograms the candidates, and recurses into the bucket holding the
    k-th element. Terminates when that bucket holds a single element or
    its range degenerates to one value. With `skip_last` the loop stops
    one refinement earlier: as soon as the live range spans at most
    `num_buckets` integers, one more split would isolate single values.

    `trace`, when given, collects one (lo, hi, candidate_count) tuple for
    the initial scan and each refinement.

    Returns (selected_values, selected_tags, threshold_lower_bound) with
    the same contract as radix_topk.
    """
    values = _validate(values, k)
    if num_buckets < 2:
        raise ValueError("num_buckets must be at least 2")
    n = values.size

    lo = int(values.min())
    hi = int(values.max())
    if stats is not None:
        stats.add_read(n)
    if trace is not None:
        trace.append((lo, hi, n))

    remaining = k
    while True:
        if lo == hi:
            return _extract_exact(values, tags, k, lo, stats)
        if skip_last and hi - lo < num_buckets:
            return _extract_at_least(values, tags, lo, stats)

        # Equal real-valued sub-ranges of [lo, hi]; the same edge values
        # integerize the chosen bucket below, so histogram membership and
        # the refined range can never disagree.
        edges = np.linspace(lo, hi, num_buckets + 1)
        candidates = (values >= lo) & (values <= hi)
        live = values[candidates]
        idx = np.minimum(
            np.searchsorted(edges, live, side="right") - 1, num_buckets - 1
        )
        hist = np.bincount(idx, minlength=num_buckets)
        if stats is not None:
            stats.add_read(n)

        at_least = np.cumsum(hist[::-1])[::-1]
        bucket = int(np.flatnonzero(at_least >= remaining)[-1])
        above = int(at_least[bucket + 1]) if bucket < num_buckets - 1 else 0
        remaining -= above
        in_bucket = int(hist[bucket])

        new_lo = int(math.ceil(edges[bucket]))
        new_hi = hi if bucket == num_buckets - 1 else int(math.ceil(edges[bucket + 1])) - 1
        lo, hi = max(lo, new_lo), min(hi, new_hi)
        if trace is not None:
            trace.append((lo, hi, in_bucket))

        if in_bucket == 1:
            # the k-th element is the single candidate left in [lo, hi]
            kth = int(values[(values >= lo) & (values <= hi)][0])
            if stats is not None:
                stats.add_read(n)
            return _extract_exact(values, tags, k, kth, stats)


def _pad_to_bitonic_length(work, k):
    """Pad with the minimum key to a power-of-two length of at least 2k."""
    target = max(2 * k, 1 << (int(work.size - 1).bit_length()))
    if work.size == k:
        target = k
    if target > work.size:
        work = np.concatenate([work, np.zeros(target - work.size, dtype=work.dtype)])
    return work


def bitonic_topk(values, k, *, tags=None, trace=None, stats=None):
    """Bitonic top-k: halve the live vector per merge round until k remain.

    Blocks of k are kept sorted in alternating directions so that each
    consecutive 2k block is a bitonic sequence; the element-wise maximum
    of its two halves is its top-k and is itself bitonic. Inputs whose
    length is not a power of two at least 2k are padded with 0, the
    minimum key, which can only surface when fewer than k nonzero
    elements exist. Requires power-of-two k.

    `trace`, when given, collects the live vector length at the start and
    after every merge round.

    Returns (selected_values, selected_tags, threshold); the result is
    exact and sorted non-increasing.
    """
    values = _validate(values, k)
    if not is_power_of_two(k):
        raise InvalidK(f"bitonic top-k requires a power-of-two k, got {k}")
    n = values.size

    if tags is not None:
        # value-major packing; tags ride in the low 32 bits and only break
        # ties among equal values, so padding zeros always lose to real keys
        work = values.astype(np.uint64) << np.uint64(32) | tags.astype(np.uint64)
    else:
        work = values.copy()
    work = _pad_to_bitonic_length(work, k)
    if stats is not None:
        stats.add_read(n)
    if trace is not None:
        trace.append(int(work.size))

    blocks = work.reshape(-1, k)
    blocks.sort(axis=1)
    blocks[1::2] = blocks[1::2, ::-1]

    while blocks.shape[0] > 1:
        pairs = blocks.reshape(-1, 2 * k)
        blocks = np.maximum(pairs[:, :k], pairs[:, k:])
        blocks.sort(axis=1)
        blocks[1::2] = blocks[1::2, ::-1]
        if stats is not None:
            stats.add_read(blocks.size * 2)
        if trace is not None:
            trace.append(int(blocks.size))

    selected = blocks[0, ::-1]
    if stats is not None:
        stats.add_written(k)
    if tags is not None:
        sel_values = (selected >> np.uint64(32)).astype(np.uint32)
        sel_tags = (selected & np.uint64(0xFFFFFFFF)).astype(tags.dtype)
        return sel_values, sel_tags, int(sel_values[-1])
    return selected, None, int(selected[-1])


def sort_and_choose(values, k, *, stats=None) -> TopKResult:
    """Exact top-k by full sort; the reference oracle for every backend."""
    values = _validate(values, k)
    stats = stats if stats is not None else WorkloadStats()
    stats.add_read(values.size)
    top = np.sort(values)[-k:][::-1]
    stats.add_written(k)
    return TopKResult(values=top, threshold=int(top[-1]), stats=stats)


def heap_topk(values, k, *, stats=None) -> TopKResult:
    """Exact top-k with a size-k min-heap sliding over the input."""
    values = _validate(values, k)
    stats = stats if stats is not None else WorkloadStats()
    stats.add_read(values.size)
    data = values.tolist()
    heap = data[:k]
    heapq.heapify(heap)
    for x in data[k:]:
        if x > heap[0]:
            heapq.heapreplace(heap, x)
    top = np.array(sorted(heap, reverse=True), dtype=values.dtype)
    stats.add_written(k)
    return TopKResult(values=top, threshold=int(top[-1]), stats=stats)
