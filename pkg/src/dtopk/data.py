"""Synthetic dataset generators and the binary vector file format.

Generators are pure functions of their arguments: the counter-based
Philox bit generator makes every draw a function of (seed, position), so
the same call always produces the same vector on every platform.

Vector file layout (all little-endian, fixed regardless of host):

    bytes 0..3    magic "DTKV"
    bytes 4..7    format version, uint32 (currently 1)
    bytes 8..15   element count, uint64
    bytes 16..    count uint32 payload values
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .core import ELEMENT_DTYPE, DtopkError, ensure_vector

MAGIC = b"DTKV"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")
HEADER_SIZE = _HEADER.size  # 16 bytes
ELEMENT_SIZE = 4

NORMAL_MEAN = 10**8
NORMAL_STDDEV = 10.0

# adversarial generator shape: 8-bit refinement levels of a 256-way scheme
CD_LEVELS = 4
CD_BUCKETS = 256


class BadMagic(DtopkError):
    """The file does not start with the vector-file magic."""


class BadVersion(DtopkError):
    """The file's format version is unsupported."""


class TruncatedFile(DtopkError):
    """The file is shorter than its header says it should be."""


class InfeasibleN(DtopkError):
    """n (or k) is too small for the adversarial construction."""


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def gen_uniform(n: int, seed: int) -> np.ndarray:
    """n draws from U[0, 2^32 - 1]."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return _rng(seed).integers(0, 2**32, size=n, dtype=np.uint32)


def gen_normal(n: int, seed: int) -> np.ndarray:
    """n draws from N(10^8, 10), rounded and clamped to the uint32 range.

    The tiny standard deviation relative to the mean produces massive
    value duplication after rounding; that is the point of this dataset,
    it stresses tie handling.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    draws = _rng(seed).normal(NORMAL_MEAN, NORMAL_STDDEV, size=n)
    return np.clip(np.rint(draws), 0, 2**32 - 1).astype(ELEMENT_DTYPE)


def gen_customized(n: int, k: int, seed: int) -> np.ndarray:
    """Adversarial vector that maximizes range-refinement iterations.

    Construction: at each of the first three 8-bit refinement levels of
    the value space, one sentinel lands in every bucket below the top
    one, and all remaining mass is drawn uniformly from the deepest top
    bucket chain [0xFFFFFF00, 0xFFFFFFFF] (which populates the final
    level's buckets as well). Every refinement therefore sees all of its
    buckets occupied while the majority of elements, and the k-th for
    any k up to the cluster size, stay in the bucket under refinement.
    The positions are shuffled so the sentinels do not cluster spatially.
    """
    sentinels_per_level = CD_BUCKETS - 1
    sentinel_levels = CD_LEVELS - 1
    if n < 4 * CD_LEVELS * sentinels_per_level:
        raise InfeasibleN(
            f"n={n} below {4 * CD_LEVELS * sentinels_per_level}, too small for "
            f"{CD_LEVELS} refinement levels of {CD_BUCKETS} buckets"
        )
    cluster_size = n - sentinel_levels * sentinels_per_level
    if k > cluster_size:
        raise InfeasibleN(f"k={k} exceeds the dense cluster size {cluster_size}")

    rng = _rng(seed)
    parts = []
    prefix = 0
    for level in range(sentinel_levels):
        shift = 32 - 8 * (level + 1)
        below_top = np.arange(sentinels_per_level, dtype=np.uint64) << shift
        low_bits = rng.integers(0, 1 << shift, size=sentinels_per_level, dtype=np.uint64)
        parts.append((prefix | below_top | low_bits).astype(ELEMENT_DTYPE))
        prefix |= 0xFF << shift
    cluster = rng.integers(prefix, 2**32, size=cluster_size, dtype=np.uint64)
    parts.append(cluster.astype(ELEMENT_DTYPE))
    out = np.concatenate(parts)
    return out[rng.permutation(n)]


def write_vector(path, values) -> None:
    """Write a vector file; payload is little-endian uint32."""
    values = ensure_vector(values)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, values.size))
        values.astype("<u4", copy=False).tofile(f)


def read_header(path) -> int:
    """Validate the header of a vector file and return its element count."""
    size = os.path.getsize(path)
    if size < HEADER_SIZE:
        raise TruncatedFile(f"{path}: {size} bytes is shorter than the 16-byte header")
    with open(path, "rb") as f:
        magic, version, count = _HEADER.unpack(f.read(HEADER_SIZE))
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise BadVersion(f"{path}: unsupported version {version}, expected {VERSION}")
    if size != HEADER_SIZE + ELEMENT_SIZE * count:
        raise TruncatedFile(
            f"{path}: header promises {count} elements "
            f"({HEADER_SIZE + ELEMENT_SIZE * count} bytes) but file has {size} bytes"
        )
    return count


def read_vector(path, *, offset: int = 0, count: int | None = None) -> np.ndarray:
    """Read a vector file, optionally a [offset, offset+count) window.

    Windowed reads are offset-addressed within the payload, which lets a
    worker stream one partition without touching the rest of the file.
    """
    total = read_header(path)
    if count is None:
        count = total - offset
    if offset < 0 or count < 0 or offset + count > total:
        raise ValueError(
            f"window [{offset}, {offset + count}) outside vector of {total} elements"
        )
    with open(path, "rb") as f:
        f.seek(HEADER_SIZE + ELEMENT_SIZE * offset)
        data = np.fromfile(f, dtype="<u4", count=count)
    if data.size != count:
        raise TruncatedFile(f"{path}: payload ended early inside the requested window")
    return data.astype(ELEMENT_DTYPE, copy=False)


GENERATORS = {"ud": gen_uniform, "nd": gen_normal, "cd": gen_customized}


def generate(dist: str, n: int, seed: int, k: int | None = None) -> np.ndarray:
    """Dispatch to a generator by distribution name (ud, nd, cd)."""
    if dist not in GENERATORS:
        raise ValueError(f"unknown distribution {dist!r}; expected one of {sorted(GENERATORS)}")
    if dist == "cd":
        if k is None:
            raise ValueError("the cd distribution requires k")
        return gen_customized(n, k, seed)
    return GENERATORS[dist](n, seed)
