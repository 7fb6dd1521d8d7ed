"""Command-line front end: generate data, run/verify top-k, sweep, distribute.

Counts (n, k, grid values, residency caps) accept plain integers or the
`2^e` power notation. Timings are reported as integer nanoseconds.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import data as data_mod
from . import distributed, tuning
from .core import DtopkError, PipelineConfig, WorkloadStats, validate_config
from .kernels import sort_and_choose
from .pipeline import dr_topk

DIST_CSV_HEADER = "worker,partitions,local_k,communication_ns,reload_ns,compute_ns,total_ns"


def parse_count(text: str) -> int:
    """Parse '12345' or '2^24' into an int."""
    text = text.strip()
    if "^" in text:
        base, _, exp = text.partition("^")
        return int(base) ** int(exp)
    return int(text)


def parse_grid(text: str) -> list[int]:
    return [parse_count(t) for t in text.split(",") if t.strip()]


@dataclass
class RunReport:
    """What `dtopk run` prints: config echo, result summary, and ratios."""

    config: PipelineConfig
    n: int
    threshold: int
    verified: bool | None
    stats: WorkloadStats

    def delegate_ratio(self) -> float:
        return self.stats.delegate_vector_len / self.n

    def concat_ratio(self) -> float:
        return self.stats.concatenated_len / self.n

    def sum_ratio(self) -> float:
        return self.delegate_ratio() + self.concat_ratio()


def _print_report(report: RunReport) -> None:
    cfg, stats = report.config, report.stats
    print(
        f"n={report.n} k={cfg.k} backend={cfg.backend} alpha={cfg.alpha} "
        f"beta={cfg.beta} skip_last={cfg.skip_last_iteration} "
        f"fallback={cfg.direct_fallback}"
    )
    print(f"threshold={report.threshold}")
    if report.verified is not None:
        print(f"verified={'true' if report.verified else 'FALSE'}")
    print(
        f"delegate_len={stats.delegate_vector_len} concat_len={stats.concatenated_len} "
        f"fully_qualified={stats.fully_qualified_subranges} "
        f"partially_qualified={stats.partially_qualified_subranges}"
    )
    print(f"elements_read={stats.elements_read} elements_written={stats.elements_written}")
    for stage, nanos in stats.per_stage_nanos.items():
        print(f"t_{stage.lower()}_ns={nanos}")
    print(f"total_ns={stats.total_nanos()}")
    print(
        f"ratio_delegate={report.delegate_ratio():.6f} "
        f"ratio_concat={report.concat_ratio():.6f} "
        f"ratio_sum={report.sum_ratio():.6f}"
    )


def _load_input(args) -> np.ndarray:
    if getattr(args, "infile", None):
        return data_mod.read_vector(args.infile)
    if not args.dist:
        raise DtopkError("give an input file or --dist")
    if not args.n:
        raise DtopkError("--dist needs --n")
    n = parse_count(args.n)
    k = parse_count(args.k) if getattr(args, "k", None) else None
    return data_mod.generate(args.dist, n, args.seed, k=k)


def cmd_gen(args) -> int:
    n = parse_count(args.n)
    k = parse_count(args.k) if args.k else None
    values = data_mod.generate(args.dist, n, args.seed, k=k)
    data_mod.write_vector(args.out, values)
    print(f"wrote {values.size} elements to {args.out}")
    return 0


def cmd_run(args) -> int:
    v = _load_input(args)
    cfg = PipelineConfig(
        k=parse_count(args.k),
        alpha=args.alpha,
        beta=args.beta,
        backend=args.backend,
        skip_last_iteration=not args.no_skip_last,
        auto_alpha=args.alpha is None,
        const_c=args.const,
    )
    resolved = validate_config(cfg, v.size)
    result = dr_topk(v, resolved)

    verified = None
    if args.verify:
        oracle = sort_and_choose(v, resolved.k)
        verified = bool(np.array_equal(np.sort(result.values), np.sort(oracle.values)))

    report = RunReport(
        config=resolved, n=int(v.size), threshold=result.threshold,
        verified=verified, stats=result.stats,
    )
    _print_report(report)
    if args.csv:
        row = tuning.SweepRow(
            alpha=resolved.alpha, beta=resolved.beta, k=resolved.k, n=int(v.size),
            t_delegate_ns=result.stats.per_stage_nanos.get("Delegate", 0),
            t_firstk_ns=result.stats.per_stage_nanos.get("FirstK", 0),
            t_concat_ns=result.stats.per_stage_nanos.get("Concat", 0),
            t_secondk_ns=result.stats.per_stage_nanos.get("SecondK", 0),
            total_ns=result.stats.total_nanos(),
            delegate_len=result.stats.delegate_vector_len,
            concat_len=result.stats.concatenated_len,
        )
        tuning.write_csv([row], args.csv)
    if verified is False:
        print("verification FAILED: result disagrees with the sort oracle", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    v = _load_input(args)
    k = parse_count(args.k)
    base = PipelineConfig(
        k=k,
        alpha=args.alpha,
        beta=args.beta,
        backend=args.backend,
        skip_last_iteration=not args.no_skip_last,
        auto_alpha=args.alpha is None,
        const_c=args.const,
    )
    grid = parse_grid(args.grid)
    kwargs = {"alphas": grid} if args.param == "alpha" else {"betas": grid}
    rows = tuning.sweep(v, k, base=base, repeats=args.repeats, **kwargs)
    if args.csv:
        tuning.write_csv(rows, args.csv)
    print(tuning.CSV_HEADER)
    for row in rows:
        print(row.to_csv())
    return 0


def cmd_dist(args) -> int:
    k = parse_count(args.k)
    cfg = PipelineConfig(k=k, beta=args.beta, backend=args.backend)
    report = distributed.run_distributed(
        args.infile, k, cfg, workers=args.workers,
        max_resident=parse_count(args.max_resident),
    )

    verified = None
    if args.verify:
        v = data_mod.read_vector(args.infile)
        oracle = sort_and_choose(v, k)
        verified = bool(
            np.array_equal(np.sort(report.result.values), np.sort(oracle.values))
        )

    n = data_mod.read_header(args.infile)
    plan = distributed.plan(n, k, args.workers, parse_count(args.max_resident))
    lines = [DIST_CSV_HEADER]
    for msg in report.messages:
        comm = report.communication_nanos(msg.worker_id)
        owned = len(plan.assignments[msg.worker_id])
        lines.append(
            f"{msg.worker_id},{owned},{msg.local_topk.size},"
            f"{comm},{msg.reload_nanos},{msg.compute_nanos},"
            f"{comm + msg.reload_nanos + msg.compute_nanos}"
        )
    print(f"workers={args.workers} k={k} threshold={report.result.threshold}")
    print(f"gathered_bytes={report.gathered_bytes} total_ns={report.total_nanos}")
    if verified is not None:
        print(f"verified={'true' if verified else 'FALSE'}")
    for line in lines:
        print(line)
    if args.csv:
        with open(args.csv, "w", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
    if verified is False:
        print("verification FAILED: result disagrees with the sort oracle", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtopk", description="Delegate-assisted top-k selection benchmark"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic vector file")
    gen.add_argument("--dist", required=True, choices=sorted(data_mod.GENERATORS))
    gen.add_argument("--n", required=True)
    gen.add_argument("--k", help="required for the cd distribution")
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    def add_common(p, with_input=True):
        if with_input:
            p.add_argument("infile", nargs="?", help="vector file (or use --dist)")
            p.add_argument("--dist", choices=sorted(data_mod.GENERATORS))
            p.add_argument("--n", help="length for generated input")
            p.add_argument("--seed", type=int, default=1)
        p.add_argument("--k", required=True)
        p.add_argument("--backend", default="radix", choices=["radix", "bucket", "bitonic"])
        p.add_argument("--alpha", type=int, default=None)
        p.add_argument("--beta", type=int, default=2)
        p.add_argument("--no-skip-last", action="store_true")
        p.add_argument("--const", type=float, default=3.0)
        p.add_argument("--csv")

    run = sub.add_parser("run", help="run one pipeline configuration")
    add_common(run)
    run.add_argument("--verify", action="store_true")
    run.set_defaults(func=cmd_run)

    swp = sub.add_parser("sweep", help="sweep alpha or beta and emit CSV")
    add_common(swp)
    swp.add_argument("--param", required=True, choices=["alpha", "beta"])
    swp.add_argument("--grid", required=True, help="comma list, e.g. 4,5,6 or 2^4,2^5")
    swp.add_argument("--repeats", type=int, default=1)
    swp.set_defaults(func=cmd_sweep)

    dst = sub.add_parser("dist", help="partitioned multi-worker run")
    dst.add_argument("infile")
    dst.add_argument("--k", required=True)
    dst.add_argument("--workers", type=int, default=1)
    dst.add_argument("--max-resident", default=str(distributed.DEFAULT_MAX_RESIDENT))
    dst.add_argument("--backend", default="radix", choices=["radix", "bucket", "bitonic"])
    dst.add_argument("--beta", type=int, default=2)
    dst.add_argument("--verify", action="store_true")
    dst.add_argument("--csv")
    dst.set_defaults(func=cmd_dist)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DtopkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
