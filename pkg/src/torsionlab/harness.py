"""Seeded experiment batches over the process and tree samplers.

A batch is described by an ExperimentConfig, executed trial by trial with
per-trial seeds derived from the master seed, and persisted as
line-delimited records.  Summaries are recomputed from records alone, so
a summary read back from disk matches the live one.  Per-trial failures
are captured inside the owning record; only configuration errors abort a
batch.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean, stdev
from typing import Iterable, Mapping, Sequence

from .groups import (
    TRIVIAL_GROUP,
    AbelianGroup,
    GroupDistribution,
    PGroup,
    aut_order,
    cl_distribution,
    group_order,
    lambda_distribution,
    log_order,
    sylow,
    tv_distance,
)
from .homology import integer_homology
from .lmprocess import (
    DEFAULT_Q0,
    DEFAULT_WINDOW_RADIUS,
    burst_analysis,
    c_value,
    lt_search,
    m_star,
    sample_trace,
    torsion_sequence,
)
from .qtrees import sample_tree
from .shadow import giant_threshold, hitting_time_experiment
from .simplicial import format_faces

KINDS = ("lt-burst", "qtree", "hitting", "enumerate", "constants")
TRIAL_KINDS = ("lt-burst", "qtree", "hitting")

WORKERS_ENV = "TORSIONLAB_WORKERS"

# Primes whose Sylow components get a total-variation column.
TV_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23)

# Enumerating the order-weighted group distributions to a 1e-6 residual
# costs minutes for k = 1; 1e-4 is invisible next to sampling error.
LAMBDA_RESIDUAL = 1e-4

# Steps the burst window grows by per extension while its ends are
# still nontrivial.
_BLOCK_CHUNK = 8


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a batch needs; two configs equal means two equal batches."""

    kind: str
    n: int
    d: int = 2
    trials: int = 1
    window_radius: int = DEFAULT_WINDOW_RADIUS
    q0: int = DEFAULT_Q0
    seed: int = 1
    workers: int = 1
    out: str | None = None
    threshold: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        for name in ("n", "d", "trials", "window_radius", "q0", "seed", "workers"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.threshold is not None and self.threshold <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold!r}")


@dataclass(frozen=True)
class TrialRecord:
    """One trial's inputs and outputs.

    Replaying the same config and index reproduces every field except
    wall_time, which is diagnostic only.
    """

    kind: str
    n: int
    d: int
    index: int
    seed: int
    outputs: Mapping[str, object]
    wall_time: float = 0.0

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "n": self.n,
            "d": self.d,
            "index": self.index,
            "seed": self.seed,
            "outputs": self.outputs,
            "wall_time": round(self.wall_time, 6),
        }
        return json.dumps(payload, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TrialRecord":
        payload = json.loads(line)
        return cls(
            kind=payload["kind"],
            n=payload["n"],
            d=payload["d"],
            index=payload["index"],
            seed=payload["seed"],
            outputs=payload["outputs"],
            wall_time=payload["wall_time"],
        )

    @property
    def failed(self) -> bool:
        return "error" in self.outputs

    def deterministic_view(self) -> tuple:
        """Every field the replay contract covers; wall_time is excluded."""
        return (
            self.kind,
            self.n,
            self.d,
            self.index,
            self.seed,
            json.dumps(self.outputs, sort_keys=True),
        )


def derive_seed(master: int, index: int) -> int:
    """Per-trial seed: 64 bits of SHA-256 over master and trial index."""
    digest = hashlib.sha256(f"{master}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def _group_json(g: AbelianGroup) -> list[str]:
    return [str(v) for v in g.invariant_factors]


def _group_from_json(factors: Iterable[str]) -> AbelianGroup:
    return AbelianGroup(tuple(int(v) for v in factors))


def _lt_burst_trial(config: ExperimentConfig, seed: int) -> dict:
    n, d = config.n, config.d
    m_max = min(m_star(n, d) + config.window_radius + 1, math.comb(n, d + 1))
    trace = sample_trace(n, d, m_max, seed)
    result = lt_search(trace, config.window_radius, config.q0)
    if result.trivial:
        return {"trivial": True}
    m0 = result.m0
    lo = max(m0 - _BLOCK_CHUNK, 0)
    hi = min(m0 + _BLOCK_CHUNK, len(trace.order))
    seq = torsion_sequence(trace, lo, hi)
    floor = max(m0 - config.window_radius, 0)
    while lo > floor and not seq[0].is_trivial:
        step = max(lo - _BLOCK_CHUNK, floor)
        seq = torsion_sequence(trace, step, lo - 1) + seq
        lo = step
    ceiling = min(m0 + config.window_radius, len(trace.order))
    while hi < ceiling and not seq[-1].is_trivial:
        step = min(hi + _BLOCK_CHUNK, ceiling)
        seq = seq + torsion_sequence(trace, hi + 1, step)
        hi = step
    record = burst_analysis(seq, result.group, m0 - lo)
    b_lo = m0 - lo
    while b_lo > 0 and not seq[b_lo - 1].is_trivial:
        b_lo -= 1
    b_hi = m0 - lo
    while b_hi + 1 < len(seq) and not seq[b_hi + 1].is_trivial:
        b_hi += 1
    return {
        "trivial": False,
        "m0": m0,
        "lt": _group_json(result.group),
        "log_lt": log_order(result.group),
        "c_value": c_value(n, m0, d),
        "jump_points": list(result.jump_points),
        "block_start": lo + b_lo,
        "block": [_group_json(g) for g in seq[b_lo : b_hi + 1]],
        "subcritical": [_group_json(g) for g in record.subcritical],
        "supercritical": [_group_json(g) for g in record.supercritical],
        "duration": record.duration,
        "phases": record.phases,
        "unimodal": record.unimodal,
    }


def _qtree_trial(config: ExperimentConfig, seed: int) -> dict:
    tree = sample_tree(config.n, seed)
    state = tree.complex_state()
    h1 = integer_homology(state, 1)
    h2 = integer_homology(state, 2)
    torsion = AbelianGroup(tuple(h1.torsion.invariant_factors))
    return {
        "faces": len(tree.faces),
        "betti1": h1.betti,
        "betti2": h2.betti,
        "h1": _group_json(torsion),
        "log_h1": log_order(torsion),
        "tree": format_faces(tree.faces),
    }


def _hitting_trial(config: ExperimentConfig, seed: int) -> dict:
    n, d = config.n, config.d
    m_max = min(m_star(n, d) + config.window_radius + 1, math.comb(n, d + 1))
    trace = sample_trace(n, d, m_max, seed)
    result = lt_search(trace, config.window_radius, config.q0)
    if result.trivial:
        return {"trivial": True}
    threshold = config.threshold
    if threshold is None:
        threshold = giant_threshold(n, d)
    report = hitting_time_experiment(trace, result, threshold, config.q0)
    return {
        "trivial": False,
        "m0": result.m0,
        "lt": _group_json(result.group),
        "threshold": threshold,
        "m_burst": report.m_burst,
        "m_giant": report.m_giant,
        "m_shadow": report.m_shadow,
        "coincide": report.coincide,
    }


_TRIAL_RUNNERS = {
    "lt-burst": _lt_burst_trial,
    "qtree": _qtree_trial,
    "hitting": _hitting_trial,
}


def _run_one(args: tuple[ExperimentConfig, int]) -> TrialRecord:
    config, index = args
    seed = derive_seed(config.seed, index)
    started = time.perf_counter()
    try:
        outputs = _TRIAL_RUNNERS[config.kind](config, seed)
    except Exception as exc:  # per-trial isolation; batch goes on
        outputs = {"error": f"{type(exc).__name__}: {exc}"}
    return TrialRecord(
        kind=config.kind,
        n=config.n,
        d=config.d,
        index=index,
        seed=seed,
        outputs=outputs,
        wall_time=time.perf_counter() - started,
    )


def resolve_workers(requested: int) -> int:
    """Environment override beats the configured worker count."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        value = int(env)
        if value <= 0:
            raise ValueError(f"{WORKERS_ENV} must be positive, got {env!r}")
        return value
    return requested


def _execute(config: ExperimentConfig, indices: Sequence[int], workers: int,
             progress=None) -> list[TrialRecord]:
    jobs = [(config, i) for i in indices]
    records: list[TrialRecord] = []
    if workers <= 1:
        for job in jobs:
            records.append(_run_one(job))
            if progress is not None:
                progress(records[-1])
        return records
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for rec in pool.map(_run_one, jobs, chunksize=1):
            records.append(rec)
            if progress is not None:
                progress(rec)
    return records


def run_experiment(config: ExperimentConfig, progress=None) -> tuple[list[TrialRecord], dict]:
    """Run a batch and summarize it.

    For lt-burst the target counts nontrivial outcomes: trivial draws are
    recorded and further indices run until the target is met, so the
    record set is the shortest index prefix holding `trials` nontrivial
    results regardless of worker count.  Other kinds run exactly `trials`
    indices.  Returns records in index order plus their summary.
    """
    if config.kind not in TRIAL_KINDS:
        raise ValueError(f"kind {config.kind!r} has a dedicated entry point")
    workers = resolve_workers(config.workers)
    if config.kind != "lt-burst":
        records = _execute(config, range(config.trials), workers, progress)
        return records, summarize(records)

    records = []
    have = 0
    next_index = 0
    cap = config.trials * 40 + 200
    while have < config.trials:
        if next_index >= cap:
            raise RuntimeError(
                f"{have} nontrivial outcomes after {next_index} trials; "
                "raise the cap or inspect the error records"
            )
        want = config.trials - have
        batch = max(workers, want + max(1, want // 16))
        batch = min(batch, cap - next_index)
        indices = range(next_index, next_index + batch)
        fresh = _execute(config, indices, workers, progress)
        records.extend(fresh)
        next_index += batch
        have = sum(
            1 for r in records if not r.failed and not r.outputs.get("trivial", False)
        )
    # Canonical prefix: drop indices past the trials-th nontrivial record.
    have = 0
    cut = len(records)
    for pos, rec in enumerate(records):
        if not rec.failed and not rec.outputs.get("trivial", False):
            have += 1
            if have == config.trials:
                cut = pos + 1
                break
    records = records[:cut]
    return records, summarize(records)


def write_records(path: str | Path, records: Iterable[TrialRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")


def read_records(path: str | Path) -> list[TrialRecord]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(TrialRecord.from_json(line))
    return out


def _stat(values: Sequence[float]) -> dict:
    if not values:
        return {"count": 0, "mean": None, "sd": None}
    return {
        "count": len(values),
        "mean": fmean(values),
        "sd": stdev(values) if len(values) > 1 else 0.0,
    }


def _plabel(h: PGroup) -> str:
    if h.is_trivial:
        return "1"
    return f"{h.q}:(" + ",".join(str(e) for e in h.partition) + ")"


def _sylow_table(counts: Counter, q: int) -> dict:
    """Observed q-component counts with trivial-relative ratios.

    The reciprocal-automorphism weights predict a count ratio
    N(trivial)/N(H) = |Aut(H)|, which is the comparison column.
    """
    total = sum(counts.values())
    trivial = counts.get(PGroup(q, ()), 0)
    rows = []
    for h in sorted(counts, key=lambda h: (h.order(), h.partition)):
        count = counts[h]
        rows.append(
            {
                "group": _plabel(h),
                "count": count,
                "freq": count / total,
                "observed_ratio": (trivial / count) if trivial else None,
                "predicted_ratio": aut_order(h),
            }
        )
    return {"total": total, "rows": rows}


def _sylow_tv(groups: Sequence[AbelianGroup], q: int) -> float:
    counts = Counter(sylow(g, q) for g in groups)
    return tv_distance(GroupDistribution.from_counts(counts), cl_distribution(q))


def _lambda_table(values: Sequence[AbelianGroup], k: int) -> dict:
    counts = Counter(values)
    theo = lambda_distribution(k, LAMBDA_RESIDUAL)
    total = sum(counts.values())
    rows = []
    for g in sorted(counts, key=lambda g: (group_order(g), g.invariant_factors)):
        rows.append(
            {
                "group": " x ".join(f"Z/{v}" for v in g.invariant_factors) or "1",
                "count": counts[g],
                "freq": counts[g] / total,
                "predicted": theo.weights.get(g, 0.0),
            }
        )
    return {
        "total": total,
        "tv": tv_distance(GroupDistribution.from_counts(counts), theo),
        "rows": rows,
    }


def _kth_neighbor(factor_lists: Sequence[Sequence[str]], k: int) -> AbelianGroup | None:
    """k-th distinct group away from the peak; trivial once the list runs out.

    Undefined (None) when the previous neighbor was already trivial,
    mirroring how the order-weighted laws condition on reaching depth k.
    """
    if len(factor_lists) < k - 1:
        return None
    if len(factor_lists) >= k:
        return _group_from_json(factor_lists[k - 1])
    return TRIVIAL_GROUP


def _summarize_lt(records: Sequence[TrialRecord]) -> dict:
    clean = [r for r in records if not r.failed]
    nontrivial = [r for r in clean if not r.outputs["trivial"]]
    groups = [_group_from_json(r.outputs["lt"]) for r in nontrivial]
    out: dict = {
        "trials": len(records),
        "errors": len(records) - len(clean),
        "trivial": len(clean) - len(nontrivial),
        "nontrivial": len(nontrivial),
        "trivial_rate": (len(clean) - len(nontrivial)) / len(clean) if clean else None,
    }
    if not nontrivial:
        return out
    out["stats"] = {
        "log_lt": _stat([r.outputs["log_lt"] for r in nontrivial]),
        "m0": _stat([r.outputs["m0"] for r in nontrivial]),
        "c_value": _stat([r.outputs["c_value"] for r in nontrivial]),
        "duration": _stat([r.outputs["duration"] for r in nontrivial]),
        "phases": _stat([r.outputs["phases"] for r in nontrivial]),
        "unimodal_rate": fmean([1.0 * r.outputs["unimodal"] for r in nontrivial]),
    }
    out["sylow"] = {
        str(q): _sylow_table(Counter(sylow(g, q) for g in groups), q) for q in (2, 3, 5)
    }
    out["sylow_tv"] = {str(q): _sylow_tv(groups, q) for q in TV_PRIMES}
    lam: dict = {}
    for side, key in (("sub", "subcritical"), ("sup", "supercritical")):
        for k in (1, 2, 3):
            values = []
            for r in nontrivial:
                g = _kth_neighbor(r.outputs[key], k)
                if g is not None:
                    values.append(g)
            if values:
                lam[f"{side}_{k}"] = _lambda_table(values, k)
    out["lambda"] = lam
    return out


def _summarize_qtree(records: Sequence[TrialRecord]) -> dict:
    clean = [r for r in records if not r.failed]
    groups = [_group_from_json(r.outputs["h1"]) for r in clean]
    out: dict = {
        "trials": len(records),
        "errors": len(records) - len(clean),
    }
    if not clean:
        return out
    out.update(
        {
            "faces_ok_rate": fmean(
                [1.0 * (r.outputs["faces"] == math.comb(r.n - 1, 2)) for r in clean]
            ),
            "betti_zero_rate": fmean(
                [1.0 * (r.outputs["betti1"] == 0 and r.outputs["betti2"] == 0) for r in clean]
            ),
            "nontrivial_rate": fmean([1.0 * (not g.is_trivial) for g in groups]),
            "log_h1": _stat([r.outputs["log_h1"] for r in clean]),
            "sylow": {
                str(q): _sylow_table(Counter(sylow(g, q) for g in groups), q)
                for q in (2, 3, 5)
            },
            "sylow_tv": {str(q): _sylow_tv(groups, q) for q in TV_PRIMES},
        }
    )
    return out


def _summarize_hitting(records: Sequence[TrialRecord]) -> dict:
    clean = [r for r in records if not r.failed]
    bearing = [r for r in clean if not r.outputs["trivial"]]
    out: dict = {
        "trials": len(records),
        "errors": len(records) - len(clean),
        "trivial": len(clean) - len(bearing),
        "burst_bearing": len(bearing),
    }
    if not bearing:
        return out

    def rate(flag) -> float:
        return fmean([1.0 * flag(r.outputs) for r in bearing])

    out.update(
        {
            "coincide_rate": rate(lambda o: bool(o["coincide"])),
            "shadow_located_rate": rate(lambda o: o["m_shadow"] is not None),
            "giant_located_rate": rate(lambda o: o["m_giant"] is not None),
            "shadow_at_burst_rate": rate(lambda o: o["m_shadow"] == o["m_burst"]),
            "giant_at_burst_rate": rate(lambda o: o["m_giant"] == o["m_burst"]),
        }
    )
    return out


_SUMMARIZERS = {
    "lt-burst": ("lt_burst", _summarize_lt),
    "qtree": ("qtree", _summarize_qtree),
    "hitting": ("hitting", _summarize_hitting),
}


def summarize(records: Sequence[TrialRecord]) -> dict:
    """Statistics tables over a record set, grouped by experiment kind."""
    if not records:
        raise ValueError("no records to summarize")
    out: dict = {}
    for kind, (key, fn) in _SUMMARIZERS.items():
        subset = [r for r in records if r.kind == kind]
        if subset:
            out[key] = fn(subset)
    if not out:
        raise ValueError("records contain no summarizable kinds")
    return out


def _table_rows(summary: dict) -> Iterable[tuple[str, list[str], list[list]]]:
    for section, body in summary.items():
        for q, table in body.get("sylow", {}).items():
            cols = ["group", "count", "freq", "observed_ratio", "predicted_ratio"]
            yield (
                f"{section}_sylow{q}",
                cols,
                [[row[c] for c in cols] for row in table["rows"]],
            )
        if "sylow_tv" in body:
            yield (
                f"{section}_sylow_tv",
                ["q", "tv"],
                [[q, v] for q, v in body["sylow_tv"].items()],
            )
        for name, table in body.get("lambda", {}).items():
            cols = ["group", "count", "freq", "predicted"]
            yield (
                f"{section}_lambda_{name}",
                cols,
                [[row[c] for c in cols] for row in table["rows"]],
            )
        if "stats" in body:
            rows = []
            for name, st in body["stats"].items():
                if isinstance(st, dict):
                    rows.append([name, st["count"], st["mean"], st["sd"]])
                else:
                    rows.append([name, "", st, ""])
            yield (f"{section}_stats", ["quantity", "count", "mean", "sd"], rows)


def write_summary_csv(summary: dict, out_dir: str | Path) -> list[Path]:
    """One CSV per table; the filename states what the table holds."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, cols, rows in _table_rows(summary):
        path = out_dir / f"{name}.csv"
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            writer.writerows(rows)
        written.append(path)
    return written
