"""Uniform sampling and enumeration of Q-acyclic 2-trees.

A 2-tree on vertex set [0, n) keeps the complete 1-skeleton and carries
exactly C(n-1, 2) triangles with vanishing rational H_1 and H_2; finite
torsion in H_1 may survive.  The sampler runs a triangle-exchange chain:
propose swapping one present triangle for one absent one, accept when
the swap preserves Q-acyclicity, stay put otherwise.  Proposals are
symmetric, so the stationary law is uniform over all 2-trees on n
vertices.

Acceptance is certified through the square block of the boundary matrix
on edges avoiding vertex 0.  Killing the star of one vertex kills no
graph cycle, so this block has the same rank as the full boundary and
the swapped complex is Q-acyclic exactly when the block stays
nonsingular.  The chain maintains the block's inverse modulo a prime p
and tests one entry of a rank-one correction per proposal; a swap whose
certificate vanishes mod p is rejected.  That never admits an invalid
state and perturbs individual acceptance rates by at most ~1/p.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Iterable

import numpy as np

from .homology import ModRankStream, fraction_free_rank
from .simplicial import (
    ComplexState,
    Simplex,
    face_table,
    format_faces,
    parse_faces,
    ranks_of_faces,
    validate_simplex,
)

STEP_CAP = 10_000_000

# Certificate moduli: large enough that a spurious singularity is ~1e-6
# per event, small enough that float64 mod-p arithmetic stays exact.
_CERT_PRIMES = (1_299_709, 1_299_721, 1_299_743)


class MixingTimeoutError(RuntimeError):
    """Chain hit the step cap before twice the degree-mixing time."""


def _mod_inplace(a: np.ndarray, p: int, tmp: np.ndarray) -> None:
    """Exact a %= p for integer-valued float64 arrays, |a| < 2^52.

    floor(a/p) computed through the reciprocal is off by at most one,
    and only at exact multiples of p, since any other quotient is at
    least 1/p away from an integer while the rounding error is below
    |a| / p * 2^-52.  One correction pass repairs those cases.
    """
    np.multiply(a, 1.0 / p, out=tmp)
    np.floor(tmp, out=tmp)
    tmp *= p
    a -= tmp
    a[a >= p] -= p
    a[a < 0] += p


@dataclass(frozen=True)
class TwoTree:
    """Complete 1-skeleton plus exactly C(n-1, 2) triangles on [0, n)."""

    n: int
    faces: frozenset[Simplex]

    def __post_init__(self) -> None:
        if self.n < 4:
            raise ValueError(f"need n >= 4, got n={self.n}")
        want = comb(self.n - 1, 2)
        if len(self.faces) != want:
            raise ValueError(f"expected {want} triangles, got {len(self.faces)}")
        for f in self.faces:
            s = validate_simplex(f)
            if len(s) != 3:
                raise ValueError(f"face {s} is not a triangle")
            if s[-1] >= self.n:
                raise ValueError(f"vertex out of range in {s} (n={self.n})")

    @classmethod
    def from_faces(cls, n: int, faces: Iterable[Iterable[int]]) -> "TwoTree":
        return cls(n, frozenset(validate_simplex(f) for f in faces))

    def complex_state(self) -> ComplexState:
        return ComplexState(self.n, 2, self.faces)


def initial_tree(n: int) -> TwoTree:
    """Cone over vertex 0: triangles {0, i, j} for all 1 <= i < j < n."""
    if n < 4:
        raise ValueError(f"need n >= 4, got n={n}")
    faces = frozenset((0, i, j) for i, j in combinations(range(1, n), 2))
    return TwoTree(n, faces)


# ---------------------------------------------------------------------------
# Q-acyclicity.


def _dense_columns(n: int, col_ranks: np.ndarray) -> list[list[int]]:
    ft = face_table(n, 2)
    mat = [[0] * len(col_ranks) for _ in range(comb(n, 2))]
    for j, t in enumerate(col_ranks):
        for rk, sg in zip(ft.facet_ranks[t], ft.signs):
            mat[rk][j] = int(sg)
    return mat


def is_qacyclic(faces: Iterable[Iterable[int]], n: int) -> bool:
    """True iff the triangle set is a 2-tree: C(n-1,2) faces of full rank.

    Rank over Q is certified modulo a large prime; a deficient result is
    retried at two fresh primes and finally settled by exact
    fraction-free elimination, so the answer is never wrong in either
    direction.
    """
    canon = {validate_simplex(f) for f in faces}
    for s in canon:
        if len(s) != 3 or s[-1] >= n:
            raise ValueError(f"invalid triangle {s} on {n} vertices")
    if len(canon) != comb(n - 1, 2):
        return False
    ranks = ranks_of_faces(n, sorted(canon, key=lambda s: s[::-1]))
    ft = face_table(n, 2)
    ncols = len(ranks)
    for q in _CERT_PRIMES:
        stream = ModRankStream(comb(n, 2), q, ncols, max_terms=4)
        for t in ranks:
            stream.push(ft.facet_ranks[t], ft.signs)
        if stream.rank == ncols:
            return True
    return fraction_free_rank(_dense_columns(n, ranks)) == ncols


# ---------------------------------------------------------------------------
# Exchange chain.


@lru_cache(maxsize=4)
def _restricted_boundary(n: int):
    """Boundary of every triangle on the edge rows avoiding vertex 0.

    Rows are indexed colexicographically over the edges {i, j} with
    1 <= i < j < n, matching the renamed complete graph on n-1 vertices.
    Returns (rows, signs, counts): triangle t has counts[t] entries
    rows[t, :counts[t]] with signs signs[t, :counts[t]].
    """
    ft = face_table(n, 2)
    nt = ft.num_faces
    rows = np.zeros((nt, 3), dtype=np.int64)
    signs = np.zeros((nt, 3), dtype=np.float64)
    counts = np.zeros(nt, dtype=np.int64)
    edge_row = {}
    for j in range(1, n):
        for i in range(1, j):
            edge_row[(i, j)] = comb(j - 1, 2) + (i - 1)
    for t in range(nt):
        a, b, c = map(int, ft.combos[t])
        k = 0
        for (u, v), sg in zip(((b, c), (a, c), (a, b)), (1.0, -1.0, 1.0)):
            if u == 0:
                continue
            rows[t, k] = edge_row[(u, v)]
            signs[t, k] = sg
            k += 1
        counts[t] = k
    return rows, signs, counts


class ChainState:
    """One chain instance: current tree plus its acceptance certificate.

    Mutable by design; `chain_step` advances in place and returns the
    same object.  `edge_degrees[r]` counts the triangles incident to the
    edge of colex rank r in the complete graph on [0, n).

    The block inverse is held as ninv - ut.T @ vt with up to _PENDING
    rank-one corrections buffered in ut, vt; the buffer is folded into
    ninv by one matrix product when full.  All arithmetic is exact in
    float64: entries live in [0, p) and every inner product is below
    (_PENDING + 3) p^2 < 2^53.
    """

    _PENDING = 128

    def __init__(self, tree: TwoTree, seed: int, p: int = _CERT_PRIMES[0]):
        n = tree.n
        self.n = n
        self.step = 0
        self.rng = np.random.default_rng(seed)
        self._p = p
        ft = face_table(n, 2)
        self._ft = ft
        self._rows, self._signs, self._counts = _restricted_boundary(n)
        order = sorted(tree.faces, key=lambda s: s[::-1])
        self._faces = [int(t) for t in ranks_of_faces(n, order)]
        self._pos = {t: j for j, t in enumerate(self._faces)}
        self.edge_degrees = np.bincount(
            ft.facet_ranks[self._faces].ravel(), minlength=comb(n, 2)
        )
        self._deg_counts = np.bincount(self.edge_degrees, minlength=n + 2)
        self._ninv = self._build_inverse()
        k = len(self._faces)
        self._ut = np.zeros((self._PENDING, k))
        self._vt = np.zeros((self._PENDING, k))
        self._scratch = np.zeros((k, k))
        self._npend = 0

    def _flush(self) -> None:
        w = self._npend
        if w:
            np.matmul(self._ut[:w].T, self._vt[:w], out=self._scratch)
            self._ninv -= self._scratch
            _mod_inplace(self._ninv, self._p, self._scratch)
            self._npend = 0

    def _inverse_column_sum(self, rows: np.ndarray, signs: np.ndarray) -> np.ndarray:
        """Signed sum of inverse columns, seeing the pending corrections."""
        p = self._p
        x = self._ninv[:, rows] @ signs
        w = self._npend
        if w:
            t = (signs @ self._vt[:w, rows].T) % p
            x -= t @ self._ut[:w]
        return x % p

    def _inverse_row(self, s: int) -> np.ndarray:
        p = self._p
        r = self._ninv[s].copy()
        w = self._npend
        if w:
            r -= self._ut[:w, s] @ self._vt[:w]
        return r % p

    @property
    def tree(self) -> TwoTree:
        combos = self._ft.combos
        return TwoTree(self.n, frozenset(tuple(map(int, combos[t])) for t in self._faces))

    def _build_inverse(self) -> np.ndarray:
        k = len(self._faces)
        p = self._p
        one_entry = all(self._counts[t] == 1 for t in self._faces)
        if one_entry:
            # Every column hits a single row (e.g. the cone tree), so the
            # block is a signed permutation and inverts by transposition.
            ninv = np.zeros((k, k))
            seen = set()
            for j, t in enumerate(self._faces):
                r = int(self._rows[t, 0])
                if r in seen:
                    raise ValueError("tree is not Q-acyclic")
                seen.add(r)
                ninv[j, r] = self._signs[t, 0] % p
            return ninv
        b = np.zeros((k, k))
        for j, t in enumerate(self._faces):
            c = self._counts[t]
            b[self._rows[t, :c], j] = self._signs[t, :c] % p
        ninv = _invert_mod(b, p)
        if ninv is None:
            if is_qacyclic(self.tree.faces, self.n):
                raise RuntimeError(f"certificate prime {p} degenerate for this tree")
            raise ValueError("tree is not Q-acyclic")
        return ninv


def _invert_mod(b: np.ndarray, p: int) -> np.ndarray | None:
    """Gauss-Jordan inverse of b mod p in exact float64, None if singular."""
    k = b.shape[0]
    a = np.concatenate([b % p, np.eye(k)], axis=1)
    for c in range(k):
        piv = c + int(np.argmax(a[c:, c] != 0))
        if a[piv, c] == 0:
            return None
        if piv != c:
            a[[c, piv]] = a[[piv, c]]
        a[c] = a[c] * pow(int(a[c, c]), p - 2, p) % p
        col = a[:, c].copy()
        col[c] = 0.0
        a -= np.outer(col, a[c])
        a %= p
    return a[:, k:]


def chain_step(state: ChainState) -> ChainState:
    """Advance one exchange step in place (lazy on rejection)."""
    rng = state.rng
    k = len(state._faces)
    nt = state._ft.num_faces
    s = int(rng.integers(k))
    while True:
        tau = int(rng.integers(nt))
        if tau not in state._pos:
            break
    p = state._p
    c = state._counts[tau]
    rows = state._rows[tau, :c]
    x = state._inverse_column_sum(rows, state._signs[tau, :c])
    xs = int(x[s])
    state.step += 1
    if xs == 0:
        return state
    # Replacing column s by the new boundary column updates the inverse
    # by -outer((x - e_s)/x_s, row s of the inverse).
    inv = pow(xs, p - 2, p)
    w = x * inv % p
    w[s] = (1.0 - inv) % p
    r = state._inverse_row(s)
    j = state._npend
    state._ut[j] = w
    state._vt[j] = r
    state._npend = j + 1
    if state._npend == state._PENDING:
        state._flush()
    sigma = state._faces[s]
    del state._pos[sigma]
    state._pos[tau] = s
    state._faces[s] = tau
    facet_ranks = state._ft.facet_ranks
    deg, cnts = state.edge_degrees, state._deg_counts
    for e in facet_ranks[sigma]:
        d = deg[e]
        cnts[d] -= 1
        cnts[d - 1] += 1
        deg[e] = d - 1
    for e in facet_ranks[tau]:
        d = deg[e]
        cnts[d] -= 1
        cnts[d + 1] += 1
        deg[e] = d + 1
    return state


def t0_reached(state: ChainState) -> bool:
    """True once the distinct edge degrees form a gap-free integer run."""
    nz = np.flatnonzero(state._deg_counts)
    return int(nz[-1] - nz[0]) + 1 == len(nz)


def sample_tree(n: int, seed: int) -> TwoTree:
    """Uniform-ish 2-tree: run the chain to twice its degree-mixing time.

    The mixing proxy t0 is the first step at which the distinct edge
    degrees are consecutive integers; the chain then runs to 2*t0.
    Raises MixingTimeoutError if the cap of STEP_CAP steps is hit first.
    """
    if n < 5:
        raise ValueError(f"need n >= 5, got n={n}")
    state = ChainState(initial_tree(n), seed)
    t0 = None
    while state.step < STEP_CAP:
        if t0 is None and t0_reached(state):
            t0 = max(state.step, 1)
        if t0 is not None and state.step >= 2 * t0:
            return state.tree
        chain_step(state)
    raise MixingTimeoutError(f"no mixing after {STEP_CAP} steps at n={n} seed={seed}")


# ---------------------------------------------------------------------------
# Exhaustive enumeration (n <= 6) and the squared-torsion identity.


def _cache_dir() -> Path:
    root = os.environ.get("TORSIONLAB_CACHE")
    if root:
        return Path(root)
    return Path.home() / ".cache" / "torsionlab"


def enumerate_qacyclic(n: int, cache_dir: str | os.PathLike | None = None) -> list[TwoTree]:
    """All 2-trees on [0, n), by scanning every C(n-1,2)-subset of triangles.

    Refuses n > 6: the scan is C(C(n,3), C(n-1,2)) rank checks, which
    stops being a desk-scale computation there.  Results are cached on
    disk keyed by n (override the location with TORSIONLAB_CACHE).
    """
    if n > 6:
        raise ValueError(f"exhaustive enumeration refused for n={n} > 6")
    if n < 4:
        raise ValueError(f"need n >= 4, got n={n}")
    cache = (Path(cache_dir) if cache_dir is not None else _cache_dir())
    path = cache / f"qacyclic_n{n}.txt"
    if path.is_file():
        blocks = path.read_text(encoding="ascii").split("\n\n")
        return [TwoTree.from_faces(n, parse_faces(b)) for b in blocks if b.strip()]
    triangles = list(combinations(range(n), 3))
    found = []
    for subset in combinations(triangles, comb(n - 1, 2)):
        if is_qacyclic(subset, n):
            found.append(TwoTree.from_faces(n, subset))
    cache.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=cache, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="ascii") as fh:
        fh.write("\n".join(format_faces(t.faces) for t in found))
    os.replace(tmp, path)
    return found


def kalai_sum(n: int) -> int:
    """Sum of |H_1|^2 over all 2-trees on [0, n)."""
    from .groups import group_order
    from .homology import integer_homology

    total = 0
    for tree in enumerate_qacyclic(n):
        summary = integer_homology(tree.complex_state(), 1)
        total += group_order(summary.torsion) ** 2
    return total
