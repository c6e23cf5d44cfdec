"""Shared fixtures: disk-cached deterministic batches for the heavy tests.

A batch is identified by its full configuration. Cached records are
trusted only after replaying trial 0 and comparing deterministic views,
so an implementation change quietly invalidates stale caches.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from torsionlab.harness import (
    ExperimentConfig,
    _run_one,
    read_records,
    run_experiment,
    write_records,
)


def _cache_dir() -> Path:
    env = os.environ.get("TORSIONLAB_CACHE")
    base = Path(env) if env else Path.home() / ".cache" / "torsionlab"
    base.mkdir(parents=True, exist_ok=True)
    return base


def cached_batch(kind: str, n: int, trials: int, seed: int, d: int = 2,
                 window: int = 100, q0: int = 10007):
    config = ExperimentConfig(
        kind=kind, n=n, d=d, trials=trials, window_radius=window,
        q0=q0, seed=seed, workers=1,
    )
    name = f"batch_{kind}_n{n}_d{d}_t{trials}_w{window}_q{q0}_s{seed}.jsonl"
    path = _cache_dir() / name
    if path.exists():
        records = read_records(path)
        probe = _run_one((config, records[0].index))
        if probe.deterministic_view() == records[0].deterministic_view():
            return records
    records, _ = run_experiment(config)
    write_records(path, records)
    return records


@pytest.fixture(scope="session")
def lt50_records():
    return cached_batch("lt-burst", 50, 520, 101)


@pytest.fixture(scope="session")
def lt60_records():
    return cached_batch("lt-burst", 60, 1000, 202)


@pytest.fixture(scope="session")
def hitting50_records():
    return cached_batch("hitting", 50, 100, 303)


@pytest.fixture(scope="session")
def qtree50_records():
    return cached_batch("qtree", 50, 100, 404)
