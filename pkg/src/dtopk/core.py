"""Shared domain types, configuration, and instrumentation counters.

Element vectors are plain numpy arrays of unsigned 32-bit integers; "top-k"
always means the k largest values under numeric unsigned order. Duplicates
are allowed and results are multiset-correct: which copy of a tied value is
reported is unspecified.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace

import numpy as np

ELEMENT_DTYPE = np.uint32
MAX_VALUE = 2**32 - 1

BACKENDS = ("radix", "bucket", "bitonic")

STAGE_DELEGATE = "Delegate"
STAGE_FIRSTK = "FirstK"
STAGE_CONCAT = "Concat"
STAGE_SECONDK = "SecondK"
STAGES = (STAGE_DELEGATE, STAGE_FIRSTK, STAGE_CONCAT, STAGE_SECONDK)


class DtopkError(Exception):
    """Base class for all library errors."""


class InvalidK(DtopkError):
    """k is outside [1, |v|] or violates a backend restriction."""


class EmptyInput(DtopkError):
    """The input vector is empty."""


class InvalidBeta(DtopkError):
    """beta does not satisfy 1 <= beta < subrange size."""


def ensure_vector(v) -> np.ndarray:
    """Coerce `v` to a 1-D uint32 array and reject empty input."""
    arr = np.asarray(v, dtype=ELEMENT_DTYPE)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size == 0:
        raise EmptyInput("input vector must hold at least one element")
    return arr


def is_power_of_two(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass
class WorkloadStats:
    """Counters describing how much work a selection run performed.

    `elements_read`/`elements_written` count logical element accesses
    (full re-scans count the whole vector once per pass). Counter updates
    go through the add_* methods, which take an internal lock so stats
    objects may be shared across threads.
    """

    delegate_vector_len: int = 0
    concatenated_len: int = 0
    fully_qualified_subranges: int = 0
    partially_qualified_subranges: int = 0
    elements_read: int = 0
    elements_written: int = 0
    per_stage_nanos: dict = field(default_factory=dict)
    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    def add_read(self, n: int) -> None:
        with self._lock:
            self.elements_read += int(n)

    def add_written(self, n: int) -> None:
        with self._lock:
            self.elements_written += int(n)

    def add_stage_nanos(self, stage: str, nanos: int) -> None:
        with self._lock:
            self.per_stage_nanos[stage] = self.per_stage_nanos.get(stage, 0) + int(nanos)

    def total_nanos(self) -> int:
        return sum(self.per_stage_nanos.values())


@dataclass(frozen=True)
class TopKResult:
    """The k selected values in non-increasing order plus the k-th threshold."""

    values: np.ndarray
    threshold: int
    stats: WorkloadStats


@dataclass(frozen=True)
class PipelineConfig:
    """Configuration for a delegate-assisted top-k run.

    `alpha` is the subrange-size exponent (subrange size 2**alpha). When
    `auto_alpha` is set (or alpha is None), validate_config resolves it
    with the closed-form tuner. `direct_fallback` is an output of
    validation: it is raised when the delegate vector cannot hold k
    entries, in which case the pipeline runs the backend directly on the
    input.
    """

    k: int
    alpha: int | None = None
    beta: int = 2
    backend: str = "radix"
    skip_last_iteration: bool = True
    auto_alpha: bool = True
    const_c: float = 3.0
    direct_fallback: bool = False

    def subrange_size(self) -> int:
        if self.alpha is None:
            raise ValueError("alpha not resolved; call validate_config first")
        return 1 << self.alpha


def effective_beta(beta: int, alpha: int) -> int:
    """Clamp beta below the subrange size (never below 1)."""
    if alpha == 0:
        return 1
    return max(1, min(beta, (1 << alpha) - 1))


def delegate_vector_len(n: int, alpha: int, beta: int) -> int:
    """Length of the delegate vector: beta entries per subrange, final
    partial subrange included."""
    return beta * math.ceil(n / (1 << alpha))


def validate_config(cfg: PipelineConfig, n: int) -> PipelineConfig:
    """Normalize `cfg` for an input of length `n`.

    Resolves alpha (auto-tuned when requested), clamps beta below the
    subrange size, and sets `direct_fallback` when delegation cannot
    produce k candidates. Idempotent: validating a validated config is a
    no-op.
    """
    if n < 1:
        raise EmptyInput("input vector must hold at least one element")
    if cfg.k < 1 or cfg.k > n:
        raise InvalidK(f"k={cfg.k} outside [1, {n}]")
    if cfg.beta < 1:
        raise InvalidBeta(f"beta={cfg.beta} must be at least 1")
    if cfg.backend not in BACKENDS:
        raise ValueError(f"unknown backend {cfg.backend!r}; expected one of {BACKENDS}")
    if cfg.backend == "bitonic" and not is_power_of_two(cfg.k):
        raise InvalidK(f"bitonic backend requires a power-of-two k, got {cfg.k}")

    max_alpha = n.bit_length() - 1  # largest alpha with 2**alpha <= n
    if cfg.auto_alpha or cfg.alpha is None:
        from .tuning import auto_alpha

        alpha = auto_alpha(n, cfg.k, cfg.const_c, beta=cfg.beta)
    else:
        alpha = min(max(int(cfg.alpha), 0), max_alpha)

    beta = effective_beta(cfg.beta, alpha)
    fallback = delegate_vector_len(n, alpha, beta) < cfg.k or (1 << alpha) <= beta
    return replace(cfg, alpha=alpha, beta=beta, direct_fallback=fallback)
