"""Command-line entry points for batches, enumeration, and constants.

Every subcommand exits 0 on success; any failure prints a single JSON
error line to stderr and exits nonzero, so callers can script against
the output without parsing tracebacks.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from collections import Counter
from pathlib import Path

from .groups import cl_normalizer, expected_phases, format_group
from .harness import (
    ExperimentConfig,
    read_records,
    run_experiment,
    summarize,
    write_records,
    write_summary_csv,
)
from .homology import integer_homology
from .lmprocess import c_d_solve, m_star, t_c_solve
from .qtrees import TwoTree, enumerate_qacyclic, kalai_sum
from .shadow import giant_threshold
from .simplicial import write_faces


def _add_common(parser: argparse.ArgumentParser, *, d_default: int = 2) -> None:
    parser.add_argument("--n", type=int, required=True, help="number of vertices")
    parser.add_argument("--d", type=int, default=d_default, help="face dimension")
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--window", type=int, default=100, help="search radius around the predicted peak")
    parser.add_argument("--q0", type=int, default=10007, help="working prime for rank certificates")
    parser.add_argument("--workers", type=int, default=0, help="0 = all available cores")
    parser.add_argument("--out", type=str, default=None, help="record file (JSON lines)")
    parser.add_argument("--csv-dir", type=str, default=None, help="directory for summary tables")
    parser.add_argument("--verbose", action="store_true", help="per-trial progress on stderr")


def _config(args: argparse.Namespace, kind: str, threshold: float | None = None) -> ExperimentConfig:
    workers = args.workers if args.workers > 0 else (os.cpu_count() or 1)
    return ExperimentConfig(
        kind=kind,
        n=args.n,
        d=args.d,
        trials=args.trials,
        window_radius=args.window,
        q0=args.q0,
        seed=args.seed,
        workers=workers,
        out=args.out,
        threshold=threshold,
    )


def _progress(args: argparse.Namespace):
    if not args.verbose:
        return None
    started = time.perf_counter()
    done = [0]

    def report(record) -> None:
        done[0] += 1
        status = "error" if record.failed else "ok"
        print(
            f"trial {record.index} {status} "
            f"({done[0]} done, {time.perf_counter() - started:.1f}s)",
            file=sys.stderr,
            flush=True,
        )

    return report


def _finish_batch(args: argparse.Namespace, records, summary) -> int:
    if args.out:
        write_records(args.out, records)
    if args.csv_dir:
        write_summary_csv(summary, args.csv_dir)
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def _cmd_lt_burst(args: argparse.Namespace) -> int:
    records, summary = run_experiment(_config(args, "lt-burst"), _progress(args))
    return _finish_batch(args, records, summary)


def _cmd_qtree_sample(args: argparse.Namespace) -> int:
    records, summary = run_experiment(_config(args, "qtree"), _progress(args))
    if args.trees_dir:
        out_dir = Path(args.trees_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for rec in records:
            if rec.failed:
                continue
            path = out_dir / f"tree_n{rec.n}_{rec.index:05d}.txt"
            with open(path, "w", encoding="ascii") as fh:
                fh.write(rec.outputs["tree"])
    return _finish_batch(args, records, summary)


def _cmd_hitting(args: argparse.Namespace) -> int:
    threshold = args.threshold
    if threshold is None:
        threshold = giant_threshold(args.n, args.d)
    records, summary = run_experiment(
        _config(args, "hitting", threshold), _progress(args)
    )
    return _finish_batch(args, records, summary)


def _cmd_qtree_enumerate(args: argparse.Namespace) -> int:
    trees = enumerate_qacyclic(args.n)
    tally: Counter = Counter()
    for tree in trees:
        torsion = integer_homology(tree.complex_state(), 1).torsion
        tally[format_group(torsion)] += 1
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, tree in enumerate(trees):
            write_faces(out_dir / f"qacyclic_n{args.n}_{i:05d}.txt", tree.faces)
    json.dump(
        {
            "n": args.n,
            "count": len(trees),
            "torsion_tally": dict(sorted(tally.items())),
        },
        sys.stdout,
        indent=2,
    )
    print()
    return 0


def _cmd_kalai_check(args: argparse.Namespace) -> int:
    total = kalai_sum(args.n)
    expected = args.n ** math.comb(args.n - 2, 2)
    json.dump(
        {"n": args.n, "sum": str(total), "expected": str(expected), "match": total == expected},
        sys.stdout,
        indent=2,
    )
    print()
    return 0 if total == expected else 1


def _cmd_constants(args: argparse.Namespace) -> int:
    out = {
        "c_d": {str(d): c_d_solve(d) for d in range(2, args.max_d + 1)},
        "t_c_at_c_d": {
            str(d): t_c_solve(c_d_solve(d), d) for d in range(2, args.max_d + 1)
        },
        "cl_normalizer": {str(q): cl_normalizer(q) for q in (2, 3, 5, 7, 11, 13)},
        "expected_phases": expected_phases(),
    }
    if args.n:
        out["m_star"] = {str(args.n): m_star(args.n, args.d)}
        out["giant_threshold"] = {str(args.n): giant_threshold(args.n, args.d)}
    json.dump(out, sys.stdout, indent=2)
    print()
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    records = []
    for path in args.records:
        records.extend(read_records(path))
    summary = summarize(records)
    if args.csv_dir:
        write_summary_csv(summary, args.csv_dir)
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torsionlab",
        description="Torsion statistics of random simplicial complexes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lt-burst", help="sample largest-torsion bursts")
    _add_common(p)
    p.set_defaults(fn=_cmd_lt_burst)

    p = sub.add_parser("qtree-sample", help="sample rationally acyclic 2-complexes")
    _add_common(p)
    p.add_argument("--trees-dir", type=str, default=None, help="write each sample as a face file")
    p.set_defaults(fn=_cmd_qtree_sample)

    p = sub.add_parser("qtree-enumerate", help="enumerate rationally acyclic 2-complexes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", type=str, default=None, help="directory for face files")
    p.set_defaults(fn=_cmd_qtree_enumerate)

    p = sub.add_parser("kalai-check", help="weighted count against the closed form")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=_cmd_kalai_check)

    p = sub.add_parser("hitting-time", help="locate burst, giant-core, and shadow times")
    _add_common(p)
    p.add_argument("--threshold", type=float, default=None, help="shadow size cut (default delta * n^(d+1))")
    p.set_defaults(fn=_cmd_hitting)

    p = sub.add_parser("constants", help="print model constants")
    p.add_argument("--max-d", type=int, default=7)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=2)
    p.set_defaults(fn=_cmd_constants)

    p = sub.add_parser("summarize", help="recompute tables from record files")
    p.add_argument("records", nargs="+", help="record files (JSON lines)")
    p.add_argument("--csv-dir", type=str, default=None)
    p.set_defaults(fn=_cmd_summarize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
