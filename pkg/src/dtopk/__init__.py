"""Delegate-based parallel top-k selection.

Instead of running a top-k algorithm over the whole input, the pipeline
extracts the top-beta "delegates" of each 2**alpha-sized subrange, takes
the top-k of that small delegate vector, and uses it to decide which
subranges (and which of their elements) can still matter before a second,
much smaller top-k finishes the job. Radix, bucket, and bitonic selection
backends are provided, along with a closed-form subrange-size tuner,
synthetic dataset generators, a partitioned multi-worker mode, and a
benchmark CLI.
"""

from .core import (
    BACKENDS,
    ELEMENT_DTYPE,
    DtopkError,
    EmptyInput,
    InvalidBeta,
    InvalidK,
    PipelineConfig,
    TopKResult,
    WorkloadStats,
    validate_config,
)
from .data import (
    BadMagic,
    BadVersion,
    InfeasibleN,
    TruncatedFile,
    gen_customized,
    gen_normal,
    gen_uniform,
    read_vector,
    write_vector,
)
from .delegate import DelegateVector, extract_delegates, extract_delegates_blocked
from .distributed import (
    DistributedReport,
    GatherMessage,
    PartitionPlan,
    WorkerFailed,
    plan,
    run_distributed,
)
from .kernels import (
    KeyedEntry,
    bitonic_topk,
    bucket_topk,
    heap_topk,
    radix_topk,
    sort_and_choose,
)
from .pipeline import QualificationReport, concatenate_filtered, dr_topk, first_topk
from .tuning import CostModelParams, auto_alpha, model_cost, sweep

__version__ = "0.1.0"

__all__ = [
    "BACKENDS",
    "ELEMENT_DTYPE",
    "BadMagic",
    "BadVersion",
    "CostModelParams",
    "DelegateVector",
    "DistributedReport",
    "DtopkError",
    "EmptyInput",
    "GatherMessage",
    "InfeasibleN",
    "InvalidBeta",
    "InvalidK",
    "KeyedEntry",
    "PartitionPlan",
    "PipelineConfig",
    "QualificationReport",
    "TopKResult",
    "TruncatedFile",
    "WorkerFailed",
    "WorkloadStats",
    "auto_alpha",
    "bitonic_topk",
    "bucket_topk",
    "concatenate_filtered",
    "dr_topk",
    "extract_delegates",
    "extract_delegates_blocked",
    "first_topk",
    "gen_customized",
    "gen_normal",
    "gen_uniform",
    "heap_topk",
    "model_cost",
    "plan",
    "radix_topk",
    "read_vector",
    "run_distributed",
    "sort_and_choose",
    "sweep",
    "validate_config",
    "write_vector",
]
