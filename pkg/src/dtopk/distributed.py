"""Partitioned multi-worker top-k with gather-to-primary aggregation.

The input vector is split into disjoint equal-length partitions (the
last may be short). When every worker's share fits the residency cap,
each worker owns exactly one partition; otherwise partitions of the cap
size are assigned round-robin and each worker streams the ones beyond
its first from the vector file, paying real read time that is reported
as reload overhead.

Workers are in-process lanes that communicate with the coordinator only
by message passing: each lane computes its local top-k (merging its own
partitions first when it owns several) and sends exactly one
GatherMessage. The coordinator blocks for all messages, concatenates the
workers * k candidates, and computes the final exact top-k. No k-th
threshold pre-exchange between workers takes place: the synchronization
it needs costs more than the concatenation work it saves.
"""

from __future__ import annotations

import contextlib
import math
import os
import queue
import threading
import time
from dataclasses import dataclass, replace

import numpy as np

from . import data as data_mod
from .core import (
    ELEMENT_DTYPE,
    DtopkError,
    InvalidK,
    PipelineConfig,
    TopKResult,
    WorkloadStats,
)
from .kernels import sort_and_choose
from .pipeline import dr_topk

DEFAULT_MAX_RESIDENT = 1 << 26  # desk-scale residency cap per worker
THREADS_ENV = "DTK_THREADS"


class WorkerFailed(DtopkError):
    """A worker lane raised; the run is aborted (no fault tolerance)."""


@dataclass(frozen=True)
class Partition:
    index: int
    offset: int
    length: int
    resident: bool


@dataclass(frozen=True)
class PartitionPlan:
    n: int
    partition_len: int
    partitions: tuple[Partition, ...]
    assignments: dict[int, list[int]]  # worker id -> partition indices, in order

    def worker_count(self) -> int:
        return len(self.assignments)


@dataclass
class GatherMessage:
    """One worker's contribution: its local top-k plus lane timings."""

    worker_id: int
    local_topk: np.ndarray  # non-increasing, min(k, elements owned) values
    compute_nanos: int
    reload_nanos: int
    sent_at_nanos: int = 0

    def payload_bytes(self) -> int:
        return 4 * int(self.local_topk.size)


@dataclass
class DistributedReport:
    result: TopKResult
    messages: list[GatherMessage]
    received_at_nanos: list[int]
    gathered_bytes: int
    total_nanos: int

    def communication_nanos(self, worker_id: int) -> int:
        msg = self.messages[worker_id]
        return max(0, self.received_at_nanos[worker_id] - msg.sent_at_nanos)


def plan(n: int, k: int, workers: int, max_resident: int = DEFAULT_MAX_RESIDENT) -> PartitionPlan:
    """Partition [0, n) for `workers` lanes under the residency cap.

    When workers * max_resident >= n each worker gets one resident
    partition of ceil(n / workers) elements; otherwise partitions of
    max_resident elements are dealt round-robin and only the first
    partition of each worker is resident.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if n < 1:
        raise ValueError("n must be at least 1")

    if workers * max_resident >= n:
        plen = math.ceil(n / workers)
    else:
        plen = max_resident
    if k > plen:
        raise InvalidK(f"k={k} exceeds the partition length {plen}")

    count = math.ceil(n / plen)
    assignments: dict[int, list[int]] = {w: [] for w in range(workers)}
    partitions = []
    for i in range(count):
        worker = i % workers
        partitions.append(
            Partition(
                index=i,
                offset=i * plen,
                length=min(plen, n - i * plen),
                resident=len(assignments[worker]) == 0,
            )
        )
        assignments[worker].append(i)
    return PartitionPlan(n=n, partition_len=plen, partitions=tuple(partitions), assignments=assignments)


def _load_partition(source, part: Partition) -> np.ndarray:
    if isinstance(source, np.ndarray):
        return source[part.offset : part.offset + part.length]
    return data_mod.read_vector(source, offset=part.offset, count=part.length)


def _worker_lane(worker_id, source, part_indices, plan_, k, cfg, outbox, gate):
    try:
        with gate:
            reload_nanos = 0
            candidates = []
            # resident partitions are in memory before the compute clock starts
            preloaded = {}
            for idx in part_indices:
                part = plan_.partitions[idx]
                if part.resident:
                    preloaded[idx] = _load_partition(source, part)

            compute_start = time.perf_counter_ns()
            for idx in part_indices:
                part = plan_.partitions[idx]
                if idx in preloaded:
                    chunk = preloaded[idx]
                else:
                    t0 = time.perf_counter_ns()
                    chunk = _load_partition(source, part)
                    reload_nanos += time.perf_counter_ns() - t0
                k_eff = min(k, part.length)
                result = dr_topk(chunk, replace(cfg, k=k_eff))
                candidates.append(result.values)

            if candidates:
                merged = np.concatenate(candidates)
            else:  # more workers than partitions; this lane owns nothing
                merged = np.empty(0, dtype=ELEMENT_DTYPE)
            local = np.sort(merged)[::-1][: min(k, merged.size)]
            compute_nanos = time.perf_counter_ns() - compute_start - reload_nanos

        msg = GatherMessage(
            worker_id=worker_id,
            local_topk=local,
            compute_nanos=compute_nanos,
            reload_nanos=reload_nanos,
        )
        msg.sent_at_nanos = time.perf_counter_ns()
        outbox.put((worker_id, msg, None))
    except BaseException as exc:  # surfaced as WorkerFailed by the coordinator
        outbox.put((worker_id, None, exc))


def _lane_gate():
    cap = os.environ.get(THREADS_ENV)
    if cap:
        return threading.BoundedSemaphore(max(1, int(cap)))
    return contextlib.nullcontext()


def run_distributed(
    source,
    k: int,
    cfg: PipelineConfig | None = None,
    workers: int = 1,
    *,
    max_resident: int = DEFAULT_MAX_RESIDENT,
) -> DistributedReport:
    """Run the pipeline across worker lanes and gather to a primary.

    `source` is either an in-memory vector or a path to a vector file;
    file sources let non-resident partitions exercise the real streaming
    read path. The DTK_THREADS environment variable caps how many lanes
    run concurrently without changing the message protocol.
    """
    start = time.perf_counter_ns()
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        n = data_mod.read_header(source)
    else:
        source = np.asarray(source)
        n = source.size
    cfg = cfg if cfg is not None else PipelineConfig(k=k)

    plan_ = plan(n, k, workers, max_resident)
    outbox: queue.Queue = queue.Queue()
    gate = _lane_gate()
    lanes = [
        threading.Thread(
            target=_worker_lane,
            args=(w, source, plan_.assignments[w], plan_, k, cfg, outbox, gate),
            name=f"dtopk-worker-{w}",
            daemon=True,
        )
        for w in range(workers)
    ]
    for lane in lanes:
        lane.start()

    messages: list[GatherMessage | None] = [None] * workers
    received: list[int] = [0] * workers
    failure = None
    for _ in range(workers):
        worker_id, msg, exc = outbox.get()
        received[worker_id] = time.perf_counter_ns()
        if exc is not None and failure is None:
            failure = (worker_id, exc)
        messages[worker_id] = msg
    for lane in lanes:
        lane.join()
    if failure is not None:
        raise WorkerFailed(f"worker {failure[0]} failed: {failure[1]!r}") from failure[1]

    gathered = np.concatenate([m.local_topk for m in messages])
    final = sort_and_choose(gathered, k, stats=WorkloadStats())
    return DistributedReport(
        result=final,
        messages=messages,
        received_at_nanos=received,
        gathered_bytes=sum(m.payload_bytes() for m in messages),
        total_nanos=time.perf_counter_ns() - start,
    )
