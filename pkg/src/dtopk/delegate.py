"""Subrange partitioning and per-subrange delegate extraction.

The input vector is cut into contiguous subranges of 2**alpha elements
and each subrange contributes its beta largest values, tagged with the
subrange id, to the delegate vector. A trailing partial subrange is
treated as a short subrange; if it holds fewer than beta elements the
missing slots are filled with 0, which can never displace a real
candidate in a largest-k query, so the delegate vector length is always
exactly beta * ceil(n / 2**alpha) regardless of the data.

Extraction kernels are compiled streaming scans over the subrange grid
whose per-element cost does not depend on the subrange size: one max
reduce for beta=1, two passes for beta=2, and a register insertion
ladder (beta comparisons per element) for larger beta. Keeping the cost
per element geometry-independent is what lets the subrange-size tuner's
flat read term survive on a CPU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import ELEMENT_DTYPE, InvalidBeta, WorkloadStats, ensure_vector

SMALL_SUBRANGE_ALPHA = 5  # at or below this, use the blocked path
BLOCK_SUBRANGES = 32  # subranges per cache-resident block


@dataclass(frozen=True)
class DelegateVector:
    """Per-subrange top-beta values with their subrange ids.

    Entries of one subrange are contiguous and non-increasing by value;
    subranges appear in input order.
    """

    values: np.ndarray
    tags: np.ndarray
    beta: int
    subrange_count: int

    def __len__(self) -> int:
        return self.values.size

    def entries(self):
        """Iterate KeyedEntry pairs; intended for tests and small inputs."""
        from .kernels import KeyedEntry

        return (
            KeyedEntry(v, t) for v, t in zip(self.values.tolist(), self.tags.tolist())
        )


@numba.njit(cache=True, nogil=True)
def _rows_top1(grid, out):
    rows, width = grid.shape
    for r in range(rows):
        m = grid[r, 0]
        for i in range(1, width):
            x = grid[r, i]
            if x > m:
                m = x
        out[r, 0] = m


@numba.njit(cache=True, nogil=True)
def _rows_top2(grid, out):
    rows, width = grid.shape
    for r in range(rows):
        m1 = grid[r, 0]
        for i in range(1, width):
            x = grid[r, i]
            if x > m1:
                m1 = x
        # second pass skips one occurrence of the maximum, so duplicated
        # maxima yield (m, m)
        m2 = np.uint32(0)
        seen_top = False
        for i in range(width):
            x = grid[r, i]
            if x == m1 and not seen_top:
                seen_top = True
            elif x > m2:
                m2 = x
        out[r, 0] = m1
        out[r, 1] = m2


@numba.njit(cache=True, nogil=True)
def _rows_ladder(grid, beta, out):
    rows, width = grid.shape
    for r in range(rows):
        for j in range(beta):
            out[r, j] = 0
        for i in range(width):
            x = grid[r, i]
            if x <= out[r, beta - 1]:
                continue
            p = beta - 1
            while p > 0 and x > out[r, p - 1]:
                out[r, p] = out[r, p - 1]
                p -= 1
            out[r, p] = x


def _topbeta_rows(grid: np.ndarray, beta: int) -> np.ndarray:
    """Top-beta of each row, non-increasing. `grid` is (subranges, width)."""
    out = np.empty((grid.shape[0], beta), dtype=ELEMENT_DTYPE)
    if beta == 1:
        _rows_top1(grid, out)
    elif beta == 2:
        _rows_top2(grid, out)
    else:
        _rows_ladder(grid, beta, out)
    return out


def _check_args(v, alpha, beta):
    v = ensure_vector(v)
    width = 1 << alpha
    if alpha < 0 or width > v.size:
        raise ValueError(f"alpha={alpha} must satisfy 0 <= alpha and 2**alpha <= {v.size}")
    if not 1 <= beta < width:
        raise InvalidBeta(f"beta={beta} must satisfy 1 <= beta < 2**alpha={width}")
    return v, width


def _subrange_grid(v: np.ndarray, width: int) -> np.ndarray:
    """View (or zero-padded copy) of `v` as rows of one subrange each."""
    n = v.size
    if n % width:
        padded = np.zeros(math.ceil(n / width) * width, dtype=ELEMENT_DTYPE)
        padded[:n] = v
        return padded.reshape(-1, width)
    return v.reshape(-1, width)


def extract_delegates(v, alpha: int, beta: int, *, stats: WorkloadStats | None = None) -> DelegateVector:
    """Build the delegate vector for subranges of size 2**alpha.

    Reads every element exactly once (the read counter increases by |v|).
    """
    v, width = _check_args(v, alpha, beta)
    grid = _subrange_grid(v, width)
    subranges = grid.shape[0]
    vals = _topbeta_rows(grid, beta)
    tags = np.repeat(np.arange(subranges, dtype=np.uint32), beta)
    if stats is not None:
        stats.add_read(v.size)
        stats.add_written(vals.size)
    return DelegateVector(vals.ravel(), tags, beta, subranges)


def extract_delegates_blocked(
    v,
    alpha: int,
    beta: int,
    *,
    stats: WorkloadStats | None = None,
    blocks_per_batch: int = 512,
) -> DelegateVector:
    """Delegate extraction for small subranges (alpha <= 5).

    Work proceeds in blocks of 32 consecutive subranges so that each
    block stays cache-resident while one lane scans one whole subrange;
    `blocks_per_batch` blocks are dispatched per kernel call. Output is
    bit-identical to extract_delegates.
    """
    if alpha > SMALL_SUBRANGE_ALPHA:
        raise ValueError(
            f"blocked extraction is for alpha <= {SMALL_SUBRANGE_ALPHA}, got {alpha}"
        )
    v, width = _check_args(v, alpha, beta)
    grid = _subrange_grid(v, width)
    subranges = grid.shape[0]

    vals = np.empty((subranges, beta), dtype=ELEMENT_DTYPE)
    step = BLOCK_SUBRANGES * blocks_per_batch
    for start in range(0, subranges, step):
        stop = min(start + step, subranges)
        vals[start:stop] = _topbeta_rows(grid[start:stop], beta)

    tags = np.repeat(np.arange(subranges, dtype=np.uint32), beta)
    if stats is not None:
        stats.add_read(v.size)
        stats.add_written(vals.size)
    return DelegateVector(vals.ravel(), tags, beta, subranges)
