"""End-to-end delegate-assisted top-k.

The run proceeds in four stages: extract per-subrange delegates, take the
(possibly relaxed) top-k of the delegate vector, concatenate the
filter-surviving elements of fully qualified subranges, and finish with
an exact top-k over the candidate pool.

Qualification logic: theta is the minimum value among the selected
delegates T. A subrange is *fully qualified* when all beta of its
delegates are in T; its elements at or above theta go into the
concatenated vector. A subrange with some but not all delegates in T is
*partially qualified*: only those selected delegates themselves remain
candidates, because every other element of the subrange is bounded by a
delegate that fell below theta. The candidate pool (concatenation output
plus partial entries) therefore always contains a multiset-correct
top-k of the input.

Two deliberate tie-handling choices keep that soundness under
duplicates: the concatenation filter is `>= theta` (a strict filter
could drop tied answers), and T includes every delegate tied with the
k-th one, so |T| may exceed k.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    STAGE_CONCAT,
    STAGE_DELEGATE,
    STAGE_FIRSTK,
    STAGE_SECONDK,
    InvalidK,
    PipelineConfig,
    TopKResult,
    WorkloadStats,
    ensure_vector,
    validate_config,
)
from .delegate import (
    SMALL_SUBRANGE_ALPHA,
    DelegateVector,
    extract_delegates,
    extract_delegates_blocked,
)

# fraction of subranges above which concatenation switches from per-subrange
# gathers to one full-vector masked scan
_DENSE_CONCAT_THRESHOLD = 0.25


@dataclass(frozen=True)
class QualificationReport:
    """Outcome of the first top-k over the delegate vector.

    selected_values/selected_tags hold T (|T| >= k; ties at theta are all
    included). fully_qualified lists subrange ids whose entire beta
    delegates are in T; partial_values/partial_tags are the T entries
    from the remaining subranges.
    """

    selected_values: np.ndarray
    selected_tags: np.ndarray
    theta: int
    fully_qualified: np.ndarray
    partial_values: np.ndarray
    partial_tags: np.ndarray


def _backend_threshold(values, k, backend, skip_last, stats):
    """Run a backend just for its threshold (selection is re-derived from it)."""
    if backend == "radix":
        _, _, theta = kernels.radix_topk(values, k, skip_last=skip_last, stats=stats)
    elif backend == "bucket":
        _, _, theta = kernels.bucket_topk(values, k, skip_last=skip_last, stats=stats)
    elif backend == "bitonic":
        _, _, theta = kernels.bitonic_topk(values, k, stats=stats)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return theta


def first_topk(
    d: DelegateVector,
    k: int,
    backend: str = "radix",
    skip_last: bool = True,
    *,
    stats: WorkloadStats | None = None,
) -> QualificationReport:
    """Top-k over the delegate vector plus subrange qualification.

    The bitonic backend is always exact (it has no refinement loop to
    skip), so skip_last is ignored there.
    """
    if k > len(d):
        raise InvalidK(f"k={k} exceeds delegate vector length {len(d)}")
    theta = _backend_threshold(d.values, k, backend, skip_last, stats)

    in_t = d.values >= theta
    per_subrange = np.bincount(d.tags[in_t], minlength=d.subrange_count)
    full = per_subrange == d.beta
    fully_qualified = np.flatnonzero(full).astype(np.uint32)
    partial_mask = in_t & ~full[d.tags]
    return QualificationReport(
        selected_values=d.values[in_t],
        selected_tags=d.tags[in_t],
        theta=int(theta),
        fully_qualified=fully_qualified,
        partial_values=d.values[partial_mask],
        partial_tags=d.tags[partial_mask],
    )


def concatenate_filtered(
    v,
    report: QualificationReport,
    alpha: int,
    *,
    stats: WorkloadStats | None = None,
) -> np.ndarray:
    """Collect elements >= theta from every fully qualified subrange.

    Output order is subrange-ascending, scan order within a subrange.
    The read counter increases by (fully qualified count) * 2**alpha.
    """
    v = ensure_vector(v)
    width = 1 << alpha
    fq = report.fully_qualified
    if stats is not None:
        stats.add_read(int(fq.size) * width)

    if fq.size == 0:
        out = np.empty(0, dtype=v.dtype)
    elif fq.size * width > v.size * _DENSE_CONCAT_THRESHOLD:
        # gather whole qualified subranges as grid rows, then filter once
        body_rows = v.size // width
        full = np.zeros(-(-v.size // width), dtype=bool)
        full[fq] = True
        body = v[: body_rows * width].reshape(body_rows, width)[full[:body_rows]].ravel()
        parts = [body[body >= report.theta]]
        if full.size > body_rows and full[body_rows]:  # partial tail subrange
            tail = v[body_rows * width :]
            parts.append(tail[tail >= report.theta])
        out = np.concatenate(parts)
    else:
        parts = []
        for s in fq.tolist():
            chunk = v[s * width : (s + 1) * width]
            parts.append(chunk[chunk >= report.theta])
        out = np.concatenate(parts)

    if stats is not None:
        stats.add_written(out.size)
    return out


def _run_backend_exact(values, k, backend, stats):
    if backend == "radix":
        sel, _, _ = kernels.radix_topk(values, k, skip_last=False, stats=stats)
    elif backend == "bucket":
        sel, _, _ = kernels.bucket_topk(values, k, skip_last=False, stats=stats)
    else:
        sel, _, _ = kernels.bitonic_topk(values, k, stats=stats)
    return sel


def dr_topk(v, cfg: PipelineConfig, *, stats: WorkloadStats | None = None) -> TopKResult:
    """Delegate-assisted top-k of `v` under `cfg`.

    The result is multiset-equal to sort_and_choose(v, k). When the
    config's direct_fallback flag is set (the delegate vector could not
    hold k entries), the backend runs directly on the input instead and
    only the SecondK stage time is populated.
    """
    v = ensure_vector(v)
    cfg = validate_config(cfg, v.size)
    stats = stats if stats is not None else WorkloadStats()

    if cfg.direct_fallback:
        for stage in (STAGE_DELEGATE, STAGE_FIRSTK, STAGE_CONCAT):
            stats.add_stage_nanos(stage, 0)
        t0 = time.perf_counter_ns()
        selected = _run_backend_exact(v, cfg.k, cfg.backend, stats)
        values = np.sort(selected)[::-1]
        stats.add_stage_nanos(STAGE_SECONDK, time.perf_counter_ns() - t0)
        return TopKResult(values=values, threshold=int(values[-1]), stats=stats)

    t0 = time.perf_counter_ns()
    extract = (
        extract_delegates_blocked if cfg.alpha <= SMALL_SUBRANGE_ALPHA else extract_delegates
    )
    d = extract(v, cfg.alpha, cfg.beta, stats=stats)
    stats.add_stage_nanos(STAGE_DELEGATE, time.perf_counter_ns() - t0)
    stats.delegate_vector_len = len(d)

    t0 = time.perf_counter_ns()
    report = first_topk(d, cfg.k, cfg.backend, cfg.skip_last_iteration, stats=stats)
    stats.add_stage_nanos(STAGE_FIRSTK, time.perf_counter_ns() - t0)
    stats.fully_qualified_subranges = int(report.fully_qualified.size)
    stats.partially_qualified_subranges = int(np.unique(report.partial_tags).size)

    t0 = time.perf_counter_ns()
    concatenated = concatenate_filtered(v, report, cfg.alpha, stats=stats)
    stats.add_stage_nanos(STAGE_CONCAT, time.perf_counter_ns() - t0)
    stats.concatenated_len = int(concatenated.size)

    t0 = time.perf_counter_ns()
    pool = np.concatenate([concatenated, report.partial_values])
    if pool.size == cfg.k:
        values = np.sort(pool)[::-1]
    else:
        selected = _run_backend_exact(pool, cfg.k, cfg.backend, stats)
        values = np.sort(selected)[::-1]
    stats.add_stage_nanos(STAGE_SECONDK, time.perf_counter_ns() - t0)
    return TopKResult(values=values, threshold=int(values[-1]), stats=stats)
