"""Random d-complex face process and the largest-torsion search.

A trace is a random ordering of distinct d-faces on a complete
(d-1)-skeleton. The search locates the steps where the top Betti
number over a finite field jumps, computes exact homology only there,
and reports the largest torsion group observed together with the
anatomy of the surrounding burst. Threshold-side predictors (the
critical density, fixed-point solver, and expected top Betti number)
live here as well.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .groups import AbelianGroup, group_order, is_prime
from .homology import ModRankStream, integer_homology
from .simplicial import ComplexState, Simplex, face_table, face_unrank, ranks_of_faces

C2_DEFAULT = 2.7538
DEFAULT_WINDOW_RADIUS = 100
DEFAULT_Q0 = 10007


class SingularFitError(ValueError):
    """Raised when a least-squares design matrix is rank deficient."""


@dataclass(frozen=True)
class ProcessTrace:
    """A random prefix of a permutation of d-faces; order[m-1] arrives at time m."""

    n: int
    d: int
    order: tuple[Simplex, ...]
    seed: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "order", tuple(tuple(f) for f in self.order))
        if len(self.order) > math.comb(self.n, self.d + 1):
            raise ValueError("more faces than the complete complex holds")
        if len(set(self.order)) != len(self.order):
            raise ValueError("duplicate faces in trace")

    def __len__(self) -> int:
        return len(self.order)

    def prefix_state(self, m: int) -> ComplexState:
        """The complex after the first m faces."""
        if not (0 <= m <= len(self.order)):
            raise ValueError(f"prefix length {m} outside [0, {len(self.order)}]")
        return ComplexState.from_faces(self.n, self.d, self.order[:m])

    def face_ranks(self) -> np.ndarray:
        if "ranks" not in self._cache:
            self._cache["ranks"] = ranks_of_faces(self.n, self.order)
        return self._cache["ranks"]


@dataclass(frozen=True)
class LTResult:
    """Outcome of the largest-torsion search over one trace."""

    group: AbelianGroup
    m0: int | None
    jump_points: tuple[int, ...]
    trivial: bool

    def __post_init__(self) -> None:
        if self.trivial and (not self.group.is_trivial or self.m0 is not None):
            raise ValueError("trivial result must carry the trivial group and no m0")


@dataclass(frozen=True)
class BurstRecord:
    """Anatomy of the nontrivial-torsion block around the peak step."""

    lt: AbelianGroup
    m0: int
    subcritical: tuple[AbelianGroup, ...]
    supercritical: tuple[AbelianGroup, ...]
    duration: int
    phases: int
    unimodal: bool

    def __post_init__(self) -> None:
        if self.phases != len(self.subcritical) + len(self.supercritical) + 1:
            raise ValueError("phases must count both group lists plus the peak")
        if self.duration < 1:
            raise ValueError("duration must be at least 1")


def sample_trace(n: int, d: int, m_max: int, seed: int) -> ProcessTrace:
    """Uniform random m_max-subset of d-faces in uniform random order.

    Partial Fisher-Yates over face ranks, so cost is O(m_max) regardless
    of C(n, d+1).
    """
    total = math.comb(n, d + 1)
    if m_max > total:
        raise ValueError(f"m_max {m_max} exceeds C({n},{d + 1}) = {total}")
    rng = random.Random(seed)
    displaced: dict[int, int] = {}
    picks = []
    for i in range(m_max):
        j = rng.randrange(i, total)
        picks.append(displaced.get(j, j))
        displaced[j] = displaced.get(i, i)
    order = tuple(face_unrank(r, n, d) for r in picks)
    return ProcessTrace(n, d, order, seed)


@lru_cache(maxsize=None)
def c_d_solve(d: int) -> float:
    """Smallest face density c at which the predicted top Betti number turns positive."""
    prev, c = 0.05, 0.05
    while c < 20.0:
        if _betti_bracket(c, d, t_c_solve(c, d)) > 0.0:
            break
        prev, c = c, c + 0.05
    else:
        raise ValueError(f"no positive predicted Betti density found for d={d}")
    lo, hi = prev, c
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _betti_bracket(mid, d, t_c_solve(mid, d)) > 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def _density_constant(d: int, c: float | None) -> float:
    if c is not None:
        return c
    if d == 2:
        return C2_DEFAULT
    if d in (3, 4, 5):
        return c_d_solve(d)
    raise ValueError(f"no density constant configured for d={d}")


def m_star(n: int, d: int, c: float | None = None) -> int:
    """floor(c_d / n * C(n, d+1)), the center of the torsion window."""
    if n <= d + 1:
        raise ValueError(f"need n > d+1, got n={n}, d={d}")
    return math.floor(_density_constant(d, c) / n * math.comb(n, d + 1))


def _betti_top_curve(trace: ProcessTrace, m_hi: int, q0: int) -> list[int]:
    """beta_d(prefix m; F_q0) for m = 0..m_hi, cached on the trace.

    One incremental rank stream serves every query on the same trace:
    beta_d grows by one exactly when the new column is dependent.
    """
    key = ("curve", q0)
    if key not in trace._cache:
        tab = face_table(trace.n, trace.d)
        capacity = min(len(trace.order), tab.num_facets)
        stream = ModRankStream(
            tab.num_facets, q0, capacity=capacity, max_terms=trace.d + 2
        )
        trace._cache[key] = (stream, [0])
    stream, beta = trace._cache[key]
    if m_hi >= len(beta):
        tab = face_table(trace.n, trace.d)
        fr = tab.facet_ranks[trace.face_ranks()]
        signs = [int(s) for s in tab.signs]
        for j in range(len(beta) - 1, m_hi):
            independent = stream.push(fr[j], signs)
            beta.append(beta[-1] + (0 if independent else 1))
    return beta


def find_jump_points(trace: ProcessTrace, m1: int, m2: int, q0: int) -> list[int]:
    """All m in the open interval (m1, m2) where beta_d plateaus then jumps.

    The condition is beta(m-1) = beta(m) < beta(m+1) over F_q0. Since
    beta_d never decreases along a trace, intervals with equal endpoint
    values contain no jump and are pruned by recursive bisection.
    """
    if not is_prime(q0):
        raise ValueError(f"{q0} is not prime")
    if not (0 <= m1 < m2 <= len(trace.order)):
        raise ValueError(f"bad interval ({m1}, {m2}) for trace of length {len(trace.order)}")
    beta = _betti_top_curve(trace, m2, q0)
    out: list[int] = []

    def search(lo: int, hi: int) -> None:
        if lo > hi or beta[hi + 1] == beta[lo]:
            return
        if lo == hi:
            if beta[lo] == beta[lo - 1] and beta[lo + 1] > beta[lo]:
                out.append(lo)
            return
        mid = (lo + hi) // 2
        search(lo, mid)
        search(mid + 1, hi)

    search(max(m1 + 1, 1), m2 - 1)
    return out


def lt_search(
    trace: ProcessTrace,
    window_radius: int = DEFAULT_WINDOW_RADIUS,
    q0: int = DEFAULT_Q0,
) -> LTResult:
    """Largest torsion group in degree d-1 across the window around m_star.

    Exact homology runs only at the jump points of beta_d mod q0; the
    largest torsion order wins, earliest step breaking ties.
    """
    ms = m_star(trace.n, trace.d)
    if len(trace.order) < ms + window_radius:
        raise ValueError(
            f"trace length {len(trace.order)} below m_star + radius = {ms + window_radius}"
        )
    lo = max(1, ms - window_radius)
    hi = min(len(trace.order) - 1, ms + window_radius)
    jumps = find_jump_points(trace, lo - 1, hi + 1, q0)
    best: tuple[int, int, AbelianGroup] | None = None
    for m in jumps:
        torsion = integer_homology(trace.prefix_state(m), trace.d - 1).torsion
        if not torsion.is_trivial:
            order = group_order(torsion)
            if best is None or order > best[0]:
                best = (order, m, torsion)
    if best is None:
        return LTResult(AbelianGroup(()), None, tuple(jumps), True)
    return LTResult(best[2], best[1], tuple(jumps), False)


def torsion_sequence(trace: ProcessTrace, m_lo: int, m_hi: int) -> list[AbelianGroup]:
    """Torsion of H_{d-1} at every step m in [m_lo, m_hi]."""
    if not (0 <= m_lo <= m_hi <= len(trace.order)):
        raise ValueError(f"bad range [{m_lo}, {m_hi}]")
    return [
        integer_homology(trace.prefix_state(m), trace.d - 1).torsion
        for m in range(m_lo, m_hi + 1)
    ]


def burst_analysis(sequence, lt: AbelianGroup, m0: int) -> BurstRecord:
    """Anatomy of the nontrivial block of a torsion sequence around index m0.

    Distinct groups are collected walking down from m0 (then separately
    up), each scan keeping its own seen-set seeded with the peak group,
    stopping at the first trivial entry.
    """
    seq = [g for g in sequence]
    if not (0 <= m0 < len(seq)):
        raise ValueError(f"m0 = {m0} outside sequence of length {len(seq)}")
    if lt.is_trivial or seq[m0] != lt:
        raise ValueError("sequence at m0 must equal the nontrivial peak group")
    lo = m0
    while lo > 0 and not seq[lo - 1].is_trivial:
        lo -= 1
    hi = m0
    while hi + 1 < len(seq) and not seq[hi + 1].is_trivial:
        hi += 1
    subcritical: list[AbelianGroup] = []
    seen = {lt}
    for i in range(m0 - 1, lo - 1, -1):
        if seq[i] not in seen:
            subcritical.append(seq[i])
            seen.add(seq[i])
    supercritical: list[AbelianGroup] = []
    seen = {lt}
    for i in range(m0 + 1, hi + 1):
        if seq[i] not in seen:
            supercritical.append(seq[i])
            seen.add(seq[i])
    orders = [group_order(g) for g in seq[lo : hi + 1]]
    k = m0 - lo
    unimodal = all(orders[i] <= orders[i + 1] for i in range(k)) and all(
        orders[i] >= orders[i + 1] for i in range(k, len(orders) - 1)
    )
    return BurstRecord(
        lt=lt,
        m0=m0,
        subcritical=tuple(subcritical),
        supercritical=tuple(supercritical),
        duration=hi - lo + 1,
        phases=len(subcritical) + len(supercritical) + 1,
        unimodal=unimodal,
    )


def c_value(n: int, f: float, d: int) -> float:
    """Face density n*f / C(n, d+1) of an f-face complex."""
    if f < 0:
        raise ValueError(f"negative face count {f}")
    return n * f / math.comb(n, d + 1)


def t_c_solve(c: float, d: int) -> float:
    """Smallest positive root of t = exp(-c (1-t)^d); 1.0 when none is below 1."""
    if c <= 0:
        raise ValueError(f"need c > 0, got {c}")
    steps = 200_000
    ts = np.linspace(0.0, 1.0, steps + 1)
    g = ts - np.exp(-c * (1.0 - ts) ** d)
    nonneg = np.nonzero(g >= 0.0)[0]
    first = int(nonneg[0])
    if first == steps:
        return 1.0
    lo = ts[first - 1] if first else 0.0
    hi = ts[first]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid - math.exp(-c * (1.0 - mid) ** d) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def _betti_bracket(c: float, d: int, t: float) -> float:
    u = 1.0 - t
    return c * t * u**d + c / (d + 1) * u ** (d + 1) - u


def predicted_betti_d(n: int, c: float, d: int) -> float:
    """Asymptotic prediction for the top Betti number at density c."""
    return math.comb(n, d) * _betti_bracket(c, d, t_c_solve(c, d))


def quadratic_fit(points) -> tuple[float, float, float]:
    """Least-squares quadratic through (x, y) points; coefficients (a, b, c)."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    x = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.array([p[1] for p in pts], dtype=np.float64)
    design = np.vander(x, 3)
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise SingularFitError("design matrix is rank deficient")
    return (float(coeffs[0]), float(coeffs[1]), float(coeffs[2]))


def predict(coeffs: tuple[float, float, float], n: float) -> float:
    a, b, c = coeffs
    return a * n * n + b * n + c
