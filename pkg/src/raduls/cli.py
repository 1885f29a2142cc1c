"""Benchmark and verification harness.

    raduls-bench --algo raduls,lsd1 --n 1000000 --threads 1,2,4 --verify
    raduls-bench speedup results.csv
"""
from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time
from collections import defaultdict
from dataclasses import astuple, dataclass, fields

import numpy as np

from .datagen import GenSpec, generate, load_file
from .lsd import LsdConfig, lsd_sort
from .records import RecordFormatError, RecordLayout
from .scheduler import SchedulerConfig, sort
from .verify import digest, oracle_sort, verify

ALGOS = ("raduls", "lsd1", "lsd4", "oracle")
FULL_VERIFY_LIMIT = 10**8

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


@dataclass
class RunResult:
    algo: str
    n: int
    record_size: int
    key_size: int
    distribution: str
    threads: int
    wall_time: float
    verified: bool
    repeat_index: int


CSV_HEADER = [f.name for f in fields(RunResult)]


def _csv_list(kind, choices=None):
    def parse(text):
        items = [s.strip() for s in text.split(",") if s.strip()]
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        try:
            values = [kind(s) for s in items]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
        if choices is not None:
            bad = [v for v in values if v not in choices]
            if bad:
                raise argparse.ArgumentTypeError(f"invalid choice(s) {bad}; choose from {choices}")
        return values
    return parse


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="raduls-bench", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--algo", type=_csv_list(str, ALGOS), default=["raduls"])
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--record-size", type=int, choices=(8, 16, 24, 32), default=16)
    p.add_argument("--key-size", type=int, choices=(8, 16), default=8)
    p.add_argument("--dist", choices=("uniform", "zipf"), default="uniform")
    p.add_argument("--theta", type=float, default=0.75)
    p.add_argument("--universe", type=int, default=1 << 24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_csv_list(_positive_int), default=[1])
    p.add_argument("--repeats", type=_positive_int, default=3)
    p.add_argument("--input", help="raw record file; overrides generation")
    p.add_argument("--verify", nargs="?", const="digest", choices=("digest", "full"))
    p.add_argument("--l2-bytes", type=_positive_int, default=262_144)
    p.add_argument("--buffer-bytes", type=_positive_int, default=256,
                   help="write-combining lane size for raduls (multiple of 64)")
    p.add_argument("--csv", default="stdout", help="output path or 'stdout'")
    return p


def _sorter(algo, layout, threads, args):
    if algo == "raduls":
        cfg = SchedulerConfig(threads=threads, l2_cache_bytes=args.l2_bytes,
                              buffer_bytes=args.buffer_bytes)
        return lambda a: sort(a, layout, cfg)
    if algo in ("lsd1", "lsd4"):
        cfg = LsdConfig(64 if algo == "lsd1" else 256, threads)
        return lambda a: lsd_sort(a, layout, cfg)

    def oracle(a):
        a[:] = oracle_sort(a, layout.key_size)
    return oracle


def _warm_up(run_sort, layout):
    # triggers JIT compilation outside the timed region
    run_sort(generate(GenSpec(4096, layout, seed=1)))


def run(argv=None, out=None, clock=time.perf_counter) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        layout = RecordLayout(args.record_size, args.key_size)
        if args.buffer_bytes % 64:
            raise ValueError("--buffer-bytes must be a multiple of 64")
        if args.input is None:
            spec = GenSpec(args.n, layout, args.dist, args.theta, args.universe, args.seed)
    except ValueError as exc:
        parser.error(str(exc))

    try:
        if args.input is not None:
            source = load_file(args.input, layout)
            distribution = "file"
        else:
            source = generate(spec)
            distribution = args.dist
    except RecordFormatError as exc:
        print(f"raduls-bench: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"raduls-bench: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MemoryError as exc:
        print(f"raduls-bench: out of memory: {exc}", file=sys.stderr)
        return EXIT_RESOURCE

    n = len(source)
    if args.verify == "full" and n > FULL_VERIFY_LIMIT:
        parser.error(f"--verify=full supports at most {FULL_VERIFY_LIMIT} records")

    own_file = out is None and args.csv != "stdout"
    stream = out if out is not None else (open(args.csv, "w", newline="") if own_file else sys.stdout)
    failures = []
    try:
        writer = csv.writer(stream)
        writer.writerow(CSV_HEADER)
        before = digest(source) if args.verify else None
        reference = oracle_sort(source, layout.key_size) if args.verify == "full" else None
        work = np.empty_like(source)
        for algo in args.algo:
            for threads in args.threads:
                run_sort = _sorter(algo, layout, threads, args)
                _warm_up(run_sort, layout)
                for rep in range(args.repeats):
                    np.copyto(work, source)
                    t0 = clock()
                    run_sort(work)
                    elapsed = clock() - t0
                    verified = False
                    if args.verify:
                        report = verify(work, layout.key_size, before, reference,
                                        stable=algo != "raduls")
                        verified = report.ok
                        if not verified:
                            failures.append((algo, threads, rep, report))
                    writer.writerow(astuple(RunResult(
                        algo, n, layout.record_size, layout.key_size, distribution,
                        threads, elapsed, verified, rep,
                    )))
                    stream.flush()
    except MemoryError as exc:
        print(f"raduls-bench: out of memory: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    finally:
        if own_file:
            stream.close()

    for algo, threads, rep, report in failures:
        print(f"raduls-bench: verification failed for algo={algo} threads={threads} "
              f"repeat={rep}: {report}", file=sys.stderr)
    return EXIT_VERIFY if failures else EXIT_OK


def speedup_report(rows) -> tuple[list[tuple[str, int, float, float]], list[str]]:
    """Median-time speedup per algorithm relative to its T=1 median.

    ``rows`` are dicts with ``algo``, ``threads`` and ``wall_time``. Returns
    ``(table, skipped_algos)``.
    """
    times = defaultdict(lambda: defaultdict(list))
    for r in rows:
        times[r["algo"]][int(r["threads"])].append(float(r["wall_time"]))
    table, skipped = [], []
    for algo, by_t in times.items():
        if 1 not in by_t:
            skipped.append(algo)
            continue
        base = statistics.median(by_t[1])
        for t in sorted(by_t):
            med = statistics.median(by_t[t])
            table.append((algo, t, med, base / med if med > 0 else float("inf")))
    return table, skipped


def speedup_main(argv) -> int:
    p = argparse.ArgumentParser(prog="raduls-bench speedup")
    p.add_argument("csv", help="CSV written by raduls-bench ('-' for stdin)")
    args = p.parse_args(argv)
    try:
        stream = sys.stdin if args.csv == "-" else open(args.csv, newline="")
    except OSError as exc:
        print(f"raduls-bench: {exc}", file=sys.stderr)
        return EXIT_USAGE
    with stream:
        table, skipped = speedup_report(csv.DictReader(stream))
    for algo in skipped:
        print(f"raduls-bench: no threads=1 rows for {algo}; skipped", file=sys.stderr)
    w = csv.writer(sys.stdout)
    w.writerow(["algo", "threads", "median_wall_time", "speedup"])
    for algo, t, med, sp in table:
        w.writerow([algo, t, f"{med:.6f}", f"{sp:.3f}"])
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv[:1] == ["speedup"]:
        return speedup_main(argv[1:])
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
