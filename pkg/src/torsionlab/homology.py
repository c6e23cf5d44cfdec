"""Exact integer homology and finite-field Betti numbers.

Smith normal form is computed in three stages matched to how boundary
matrices behave in practice: greedy elimination of unit pivots in a
sparse representation, dense int64 reduction with minimal-|entry|
pivoting once the block is small or fills in, and a dense
arbitrary-precision pass the moment entries threaten to overflow.
Mod-q ranks use float64 arithmetic kept exact by bounding every
intermediate below 2**53.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .groups import AbelianGroup, is_prime
from .simplicial import ComplexState, Simplex, face_table, face_unrank, ranks_of_faces

# Phase switches for smith_normal_form. Dense int64 arithmetic is safe
# while entries stay at or below 2**30: one reduction step multiplies an
# entry by a quotient of comparable size, so products stay under 2**62.
_DENSE_CELLS = 40_000
_INT64_LIMIT = 1 << 30


@dataclass(frozen=True)
class SparseIntMatrix:
    """Integer matrix as (row, col, value) triples; zeros are never stored."""

    rows: int
    cols: int
    entries: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "entries", tuple((int(r), int(c), int(v)) for r, c, v in self.entries)
        )
        seen = set()
        for r, c, v in self.entries:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"entry ({r},{c}) outside {self.rows}x{self.cols}")
            if v == 0:
                raise ValueError(f"stored zero at ({r},{c})")
            if (r, c) in seen:
                raise ValueError(f"duplicate entry at ({r},{c})")
            seen.add((r, c))

    def to_dense(self) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for r, c, v in self.entries:
            out[r][c] = v
        return out

    def to_text(self) -> str:
        head = f"{self.rows} {self.cols} {len(self.entries)}"
        body = "\n".join(f"{r} {c} {v}" for r, c, v in self.entries)
        return head + ("\n" + body if body else "") + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SparseIntMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        rows, cols, count = map(int, lines[0].split())
        entries = tuple(tuple(map(int, ln.split())) for ln in lines[1 : count + 1])
        return cls(rows, cols, entries)


@dataclass(frozen=True)
class SmithForm:
    """Invariant factors d_1 | d_2 | ... | d_r of an integer matrix."""

    invariants: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "invariants", tuple(int(v) for v in self.invariants))
        for v in self.invariants:
            if v < 1:
                raise ValueError(f"invariant factor {v} < 1")
        for a, b in zip(self.invariants, self.invariants[1:]):
            if b % a:
                raise ValueError(f"invariant factors out of chain: {a} then {b}")

    @property
    def rank(self) -> int:
        return len(self.invariants)


@dataclass(frozen=True)
class HomologySummary:
    betti: int
    torsion: AbelianGroup

    def __post_init__(self) -> None:
        if self.betti < 0:
            raise ValueError(f"negative betti {self.betti}")


def smith_normal_form(m: SparseIntMatrix) -> SmithForm:
    rows: dict[int, dict[int, int]] = {}
    for r, c, v in m.entries:
        rows.setdefault(r, {})[c] = v
    return SmithForm(tuple(_snf_of_rows(rows)))


def _snf_of_rows(rows: dict[int, dict[int, int]]) -> list[int]:
    """Destructive SNF of a dict-of-dicts matrix; returns all invariant factors."""
    units = _eliminate_unit_pivots(rows)
    invs = [1] * units
    if not rows:
        return invs
    row_keys = sorted(rows)
    col_keys = sorted({c for row in rows.values() for c in row})
    cmap = {c: j for j, c in enumerate(col_keys)}
    big = any(abs(v) > _INT64_LIMIT for row in rows.values() for v in row.values())
    if big:
        dense = [[0] * len(col_keys) for _ in row_keys]
        for i, r in enumerate(row_keys):
            for c, v in rows[r].items():
                dense[i][cmap[c]] = v
        return invs + _snf_dense_big(dense)
    a = np.zeros((len(row_keys), len(col_keys)), dtype=np.int64)
    for i, r in enumerate(row_keys):
        for c, v in rows[r].items():
            a[i, cmap[c]] = v
    return invs + _snf_dense_int64(a)


def _eliminate_unit_pivots(rows: dict[int, dict[int, int]]) -> int:
    """Pivot on +-1 entries while the matrix stays sparse; returns pivot count.

    Pivot rows come off a heap keyed by fill-in (row support size, then
    sparsest column among the row's unit entries), which keeps the
    elimination close to linear on boundary matrices.
    """
    cols: dict[int, set[int]] = {}
    nnz = 0
    for r, row in rows.items():
        for c in row:
            cols.setdefault(c, set()).add(r)
        nnz += len(row)
    heap = [
        (len(row), r) for r, row in rows.items() if any(abs(v) == 1 for v in row.values())
    ]
    heapq.heapify(heap)
    units = 0
    while heap:
        rn, r = heapq.heappop(heap)
        row = rows.get(r)
        if row is None:
            continue
        if len(row) != rn:
            if any(abs(v) == 1 for v in row.values()):
                heapq.heappush(heap, (len(row), r))
            continue
        best = None
        for c, v in row.items():
            if v == 1 or v == -1:
                key = (len(cols[c]), c)
                if best is None or key < best[0]:
                    best = (key, c, v)
        if best is None:
            continue
        _, pc, pv = best
        prow = rows.pop(r)
        nnz -= len(prow)
        for c in prow:
            cols[c].discard(r)
        for r2 in list(cols.get(pc, ())):
            row2 = rows[r2]
            f = row2[pc] * pv
            for c, v in prow.items():
                cur = row2.get(c)
                nv = (cur or 0) - f * v
                if nv:
                    if cur is None:
                        cols[c].add(r2)
                        nnz += 1
                    row2[c] = nv
                elif cur is not None:
                    del row2[c]
                    cols[c].discard(r2)
                    nnz -= 1
            if not row2:
                del rows[r2]
            elif any(abs(v) == 1 for v in row2.values()):
                heapq.heappush(heap, (len(row2), r2))
        for c in prow:
            if c in cols and not cols[c]:
                del cols[c]
        units += 1
        cells = len(rows) * len(cols)
        if rows and (cells <= _DENSE_CELLS or 5 * nnz > 2 * cells):
            break
    return units


def _balanced_quot(x: np.ndarray, p: int) -> np.ndarray:
    """Quotients q minimizing |x - q p| (elementwise, exact int64)."""
    q = x // p
    r = x - q * p
    return q + (2 * np.abs(r) > abs(p))


def _snf_dense_int64(a: np.ndarray) -> list[int]:
    invs: list[int] = []
    while a.size:
        absa = np.abs(a)
        if not absa.any():
            break
        nz_min = int(absa[absa > 0].min())
        cand_r, cand_c = np.nonzero(absa == nz_min)
        pick = np.lexsort((cand_r, cand_c))[0]
        pi, pj = int(cand_r[pick]), int(cand_c[pick])
        a[[0, pi], :] = a[[pi, 0], :]
        a[:, [0, pj]] = a[:, [pj, 0]]
        while True:
            if int(np.abs(a).max()) > _INT64_LIMIT:
                return invs + _snf_dense_big([[int(v) for v in row] for row in a])
            p = int(a[0, 0])
            col = a[1:, 0]
            nzr = np.nonzero(col)[0]
            if nzr.size:
                q = _balanced_quot(col[nzr], p)
                a[1 + nzr, :] -= q[:, None] * a[0, :]
                rem = a[1 + nzr, 0]
                live = np.nonzero(rem)[0]
                if live.size:
                    k = int(1 + nzr[live[np.argmin(np.abs(rem[live]))]])
                    a[[0, k], :] = a[[k, 0], :]
                    continue
            rowv = a[0, 1:]
            nzc = np.nonzero(rowv)[0]
            if nzc.size:
                q = _balanced_quot(rowv[nzc], p)
                a[:, 1 + nzc] -= q[None, :] * a[:, :1]
                rem = a[0, 1 + nzc]
                live = np.nonzero(rem)[0]
                if live.size:
                    k = int(1 + nzc[live[np.argmin(np.abs(rem[live]))]])
                    a[:, [0, k]] = a[:, [k, 0]]
                    continue
            rest = a[1:, 1:]
            if rest.size:
                bad = np.nonzero((rest % p).any(axis=1))[0]
                if bad.size:
                    a[0, :] += a[1 + int(bad[0]), :]
                    continue
            break
        invs.append(abs(int(a[0, 0])))
        a = a[1:, 1:]
    return invs


def _bal_quot_int(x: int, p: int) -> int:
    q, r = divmod(x, p)
    if 2 * abs(r) > abs(p):
        q += 1
    return q


def _snf_dense_big(a: list[list[int]]) -> list[int]:
    """Dense SNF over Python integers; the no-overflow backstop."""
    invs: list[int] = []
    while a and a[0]:
        best = None
        for i, row in enumerate(a):
            for j, v in enumerate(row):
                if v:
                    key = (abs(v), j, i)
                    if best is None or key < best:
                        best = key
        if best is None:
            break
        _, pj, pi = best
        a[0], a[pi] = a[pi], a[0]
        if pj:
            for row in a:
                row[0], row[pj] = row[pj], row[0]
        while True:
            p = a[0][0]
            dirty = False
            for i in range(1, len(a)):
                x = a[i][0]
                if x:
                    q = _bal_quot_int(x, p)
                    if q:
                        row0 = a[0]
                        ai = a[i]
                        for j in range(len(ai)):
                            ai[j] -= q * row0[j]
                    if a[i][0]:
                        a[0], a[i] = a[i], a[0]
                        dirty = True
                        break
            if dirty:
                continue
            width = len(a[0])
            for j in range(1, width):
                x = a[0][j]
                if x:
                    q = _bal_quot_int(x, p)
                    if q:
                        for row in a:
                            row[j] -= q * row[0]
                    if a[0][j]:
                        for row in a:
                            row[0], row[j] = row[j], row[0]
                        dirty = True
                        break
            if dirty:
                continue
            fixed = False
            for i in range(1, len(a)):
                if any(v % p for v in a[i]):
                    row0 = a[0]
                    ai = a[i]
                    for j in range(width):
                        row0[j] += ai[j]
                    fixed = True
                    break
            if not fixed:
                break
        invs.append(abs(a[0][0]))
        a = [row[1:] for row in a[1:]]
    return invs


class ModRankStream:
    """Incremental column rank of a sparse integer matrix modulo a prime.

    Basis columns of the column space are kept reduced: each has a 1 in
    its own pivot row and zeros in every other pivot row. Reducing an
    incoming sparse column is then one coefficient gather over its
    support plus a short sweep over recent pivots. The expensive dual
    step, zeroing new pivot rows inside the old basis, is deferred and
    executed as one matrix product per window of accepted columns.
    Arithmetic runs in float64 and stays exact: every value lives in
    [0, q) and every intermediate sum is below (capacity + 2) q^2 < 2^53.
    """

    _WINDOW = 48

    def __init__(self, n_rows: int, q: int, capacity: int, max_terms: int = 8):
        if not is_prime(q):
            raise ValueError(f"{q} is not prime")
        cap = min(capacity, n_rows)
        if (cap + 2) * q * q >= 1 << 53:
            raise ValueError(f"modulus {q} too large for exact float64 at rank {cap}")
        self.n_rows = n_rows
        self.q = q
        self.max_terms = max_terms
        self._basis = np.zeros((n_rows, cap))
        self._pivot_row = np.empty(cap, dtype=np.int64)
        self.pivot_of_row = np.full(n_rows, -1, dtype=np.int64)
        self.rank = 0
        self._clean = 0  # columns < _clean have zeros at all other pivot rows

    def _flush(self) -> None:
        """Zero the recent pivot rows inside the pre-window basis columns."""
        r, c0 = self.rank, self._clean
        if r == c0:
            return
        if c0:
            fresh = self._basis[:, c0:r]
            coeffs = self._basis[self._pivot_row[c0:r], :c0]
            old = self._basis[:, :c0]
            old -= fresh @ coeffs
            old %= self.q
        self._clean = r

    def residual(self, rows, vals) -> np.ndarray:
        """Fully reduced representative of the column modulo the basis."""
        if len(rows) > self.max_terms:
            raise ValueError(f"column with {len(rows)} terms exceeds {self.max_terms}")
        q = self.q
        c = np.zeros(self.n_rows)
        idx = np.asarray(rows, dtype=np.int64)
        c[idx] = np.asarray(vals, dtype=np.float64) % q
        piv = self.pivot_of_row[idx]
        hit = np.nonzero(piv >= 0)[0]
        if hit.size:
            ks = piv[hit]
            c -= self._basis[:, ks] @ c[idx[hit]]
            c %= q
        # pre-window columns may have reintroduced recent pivot rows
        for k in range(self._clean, self.rank):
            coef = c[self._pivot_row[k]]
            if coef:
                c -= coef * self._basis[:, k]
                c %= q
        return c

    def in_span(self, rows, vals) -> bool:
        return not self.residual(rows, vals).any()

    def push(self, rows, vals) -> bool:
        """Add a column; True if it enlarged the span."""
        c = self.residual(rows, vals)
        nz = np.nonzero(c)[0]
        if not nz.size:
            return False
        p = int(nz[0])
        q = self.q
        c = (c * float(pow(int(c[p]), -1, q))) % q
        r = self.rank
        if r >= self._basis.shape[1]:
            raise ValueError("rank exceeded declared capacity")
        # keep the window mutually reduced so flushing is one product
        if r > self._clean:
            rowvals = self._basis[p, self._clean : r]
            nzc = np.nonzero(rowvals)[0]
            if nzc.size:
                ks = self._clean + nzc
                self._basis[:, ks] -= np.outer(c, rowvals[nzc])
                self._basis[:, ks] %= q
        self._basis[:, r] = c
        self._pivot_row[r] = p
        self.pivot_of_row[p] = r
        self.rank = r + 1
        if self.rank - self._clean >= self._WINDOW:
            self._flush()
        return True

    def batch_in_span(self, row_matrix: np.ndarray, signs) -> np.ndarray:
        """Span membership for many columns sharing one sign pattern.

        row_matrix has one candidate column per row: the row indices of
        its nonzero entries, with values signs[t] at row_matrix[:, t].
        """
        self._flush()
        q = self.q
        count, terms = row_matrix.shape
        if terms > self.max_terms:
            raise ValueError(f"{terms} terms exceeds {self.max_terms}")
        svals = [int(s) % q for s in signs]
        out = np.empty(count, dtype=bool)
        chunk = max(1, 30_000_000 // (8 * max(1, self.n_rows)))
        for lo in range(0, count, chunk):
            sub = row_matrix[lo : lo + chunk]
            b = sub.shape[0]
            res = np.zeros((self.n_rows, b))
            cols = np.arange(b)
            for t in range(terms):
                res[sub[:, t], cols] += svals[t]
            for t in range(terms):
                piv = self.pivot_of_row[sub[:, t]]
                has = np.nonzero(piv >= 0)[0]
                if has.size:
                    res[:, has] -= self._basis[:, piv[has]] * svals[t]
            res %= q
            out[lo : lo + b] = ~res.any(axis=0)
        return out


def _collapse_ranks(n: int, d: int, col_ranks: np.ndarray) -> tuple[np.ndarray, int]:
    """Greedy free-facet removal; returns (alive column mask, pairs removed)."""
    tab = face_table(n, d)
    fr = tab.facet_ranks[col_ranks]
    deg = np.bincount(fr.ravel(), minlength=tab.num_facets)
    by_facet: dict[int, list[int]] = {}
    for pos in range(fr.shape[0]):
        for f in fr[pos]:
            by_facet.setdefault(int(f), []).append(pos)
    alive = np.ones(len(col_ranks), dtype=bool)
    queue = deque(int(f) for f in np.nonzero(deg == 1)[0])
    pairs = 0
    while queue:
        f = queue.popleft()
        if deg[f] != 1:
            continue
        pos = next(p for p in by_facet[f] if alive[p])
        alive[pos] = False
        pairs += 1
        for f2 in fr[pos]:
            f2 = int(f2)
            deg[f2] -= 1
            if deg[f2] == 1:
                queue.append(f2)
    return alive, pairs


def collapse_reduce(
    state: ComplexState,
) -> tuple[tuple[Simplex, ...], tuple[Simplex, ...]]:
    """Remove free ((d-1)-face, d-face) pairs until none remain.

    Returns the surviving (d-1)-faces (those still under a surviving
    d-face) and the surviving d-faces, both in colex order.
    """
    col_faces = state.sorted_faces()
    ranks = ranks_of_faces(state.n, col_faces)
    alive, _ = _collapse_ranks(state.n, state.d, ranks)
    kept = tuple(f for f, a in zip(col_faces, alive) if a)
    if not kept:
        return (), ()
    tab = face_table(state.n, state.d)
    facet_ranks = np.unique(tab.facet_ranks[ranks[alive]])
    facets = tuple(face_unrank(int(r), state.n, state.d - 1) for r in facet_ranks)
    return facets, kept


def _reduced_snf(n: int, d: int, col_ranks: np.ndarray) -> tuple[int, list[int]]:
    """Collapse, then SNF of the surviving block of the top boundary map.

    Each removed pair is a unit pivot of the full matrix, so the full
    SNF is the surviving block's SNF plus one invariant factor 1 per
    pair. Facets missing from every surviving face are zero rows and
    are never materialized.
    """
    alive, pairs = _collapse_ranks(n, d, col_ranks)
    if not alive.any():
        return pairs, []
    tab = face_table(n, d)
    fr = tab.facet_ranks[col_ranks[alive]]
    rows: dict[int, dict[int, int]] = {}
    for j in range(fr.shape[0]):
        for t in range(d + 1):
            rows.setdefault(int(fr[j, t]), {})[j] = int(tab.signs[t])
    return pairs, _snf_of_rows(rows)


def integer_homology(state: ComplexState, i: int) -> HomologySummary:
    """Exact H_i for i in {d-1, d}, via collapse and Smith normal form."""
    n, d = state.n, state.d
    if i not in (d - 1, d):
        raise ValueError(f"homology computed only in degrees {d - 1} and {d}")
    ranks = ranks_of_faces(n, state.sorted_faces())
    pairs, invs = _reduced_snf(n, d, ranks)
    rank_top = pairs + len(invs)
    if i == d:
        return HomologySummary(len(state.faces) - rank_top, AbelianGroup(()))
    # The complete (d-1)-skeleton has torsion-free homology below its top
    # degree, so its boundary maps have all-unit invariant factors and
    # rank C(n-1, d-1) over the integers and over every field.
    betti = math.comb(n, d) - math.comb(n - 1, d - 1) - rank_top
    torsion = AbelianGroup(tuple(v for v in invs if v > 1))
    return HomologySummary(betti, torsion)


def _rank_mod_q(state: ComplexState, q: int) -> int:
    """rank of the top boundary map over F_q."""
    faces = state.sorted_faces()
    if not faces:
        return 0
    tab = face_table(state.n, state.d)
    fr = tab.facet_ranks[ranks_of_faces(state.n, faces)]
    signs = [int(s) for s in tab.signs]
    stream = ModRankStream(
        tab.num_facets, q, capacity=len(faces), max_terms=state.d + 2
    )
    for j in range(fr.shape[0]):
        stream.push(fr[j], signs)
    return stream.rank


def betti_mod_q(state: ComplexState, i: int, q: int) -> int:
    """dim H_i(state; F_q) = n_i - rank_q(d_i) - rank_q(d_{i+1})."""
    if not is_prime(q):
        raise ValueError(f"{q} is not prime")
    n, d = state.n, state.d
    if not (0 <= i <= d):
        raise ValueError(f"need 0 <= i <= {d}, got {i}")

    def skeleton_rank(k: int) -> int:
        # boundary map out of the complete k-skeleton; field-independent
        return math.comb(n - 1, k) if k >= 1 else 0

    if i < d:
        n_i = math.comb(n, i + 1)
        r_i = skeleton_rank(i)
        r_up = _rank_mod_q(state, q) if i + 1 == d else skeleton_rank(i + 1)
    else:
        n_i = len(state.faces)
        r_i = _rank_mod_q(state, q)
        r_up = 0
    return n_i - r_i - r_up


def fraction_free_rank(mat: list[list[int]]) -> int:
    """Exact integer rank by fraction-free elimination (no modular shortcuts)."""
    a = [[int(v) for v in row] for row in mat]
    if not a or not a[0]:
        return 0
    n_rows, n_cols = len(a), len(a[0])
    prev = 1
    r = 0
    for c in range(n_cols):
        pr = next((i for i in range(r, n_rows) if a[i][c]), None)
        if pr is None:
            continue
        a[r], a[pr] = a[pr], a[r]
        for i in range(r + 1, n_rows):
            for j in range(c + 1, n_cols):
                a[i][j] = (a[i][j] * a[r][c] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        prev = a[r][c]
        r += 1
        if r == n_rows:
            break
    return r
