"""Independent reference implementations the tests check against.

Everything here is deliberately naive: direct definitions, exhaustive
enumeration, or textbook elimination, sharing no code with the package.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import numpy as np


def det_int(mat: list[list[int]]) -> int:
    """Exact determinant by cofactor expansion (small matrices only)."""
    k = len(mat)
    if k == 0:
        return 1
    if k == 1:
        return mat[0][0]
    total = 0
    for j in range(k):
        if mat[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1 :] for row in mat[1:]]
        total += (-1) ** j * mat[0][j] * det_int(minor)
    return total


def minor_gcd_invariants(mat: list[list[int]]) -> list[int]:
    """Invariant factors via gcds of k x k minors; exponential, tiny inputs."""
    rows, cols = len(mat), len(mat[0]) if mat else 0
    out = []
    previous = 1
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for ri in itertools.combinations(range(rows), k):
            for ci in itertools.combinations(range(cols), k):
                sub = [[mat[r][c] for c in ci] for r in ri]
                g = math.gcd(g, abs(det_int(sub)))
        if g == 0:
            break
        out.append(g // previous)
        previous = g
    return out


def rank_fraction(mat: list[list[int]]) -> int:
    """Rational rank by Fraction Gauss elimination."""
    work = [[Fraction(v) for v in row] for row in mat]
    rows = len(work)
    cols = len(work[0]) if rows else 0
    rank = 0
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if work[r][c] != 0), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        inv = 1 / work[rank][c]
        work[rank] = [v * inv for v in work[rank]]
        for r in range(rows):
            if r != rank and work[r][c] != 0:
                f = work[r][c]
                work[r] = [a - f * b for a, b in zip(work[r], work[rank])]
        rank += 1
    return rank


def rank_mod(mat: np.ndarray, q: int) -> int:
    """Rank over F_q by plain elimination."""
    work = np.array(mat, dtype=np.int64) % q
    rows, cols = work.shape
    rank = 0
    for c in range(cols):
        pivot = None
        for r in range(rank, rows):
            if work[r, c] % q:
                pivot = r
                break
        if pivot is None:
            continue
        work[[rank, pivot]] = work[[pivot, rank]]
        inv = pow(int(work[rank, c]), q - 2, q)
        work[rank] = (work[rank] * inv) % q
        for r in range(rows):
            if r != rank and work[r, c]:
                work[r] = (work[r] - work[r, c] * work[rank]) % q
        rank += 1
    return rank


def in_span_mod(basis_cols: np.ndarray, vec: np.ndarray, q: int) -> bool:
    """Is vec in the F_q column span of basis_cols?"""
    a = rank_mod(basis_cols, q)
    b = rank_mod(np.column_stack([basis_cols, vec]), q)
    return a == b


def random_unimodular(k: int, rng: random.Random, ops: int = 6) -> list[list[int]]:
    """Product of elementary row operations: determinant is +-1 by construction."""
    mat = [[1 if i == j else 0 for j in range(k)] for i in range(k)]
    for _ in range(ops):
        kind = rng.randrange(3)
        i, j = rng.sample(range(k), 2) if k > 1 else (0, 0)
        if kind == 0 and i != j:
            factor = rng.randrange(-3, 4)
            for c in range(k):
                mat[i][c] += factor * mat[j][c]
        elif kind == 1 and i != j:
            mat[i], mat[j] = mat[j], mat[i]
        else:
            for c in range(k):
                mat[i][c] = -mat[i][c]
    return mat


def mat_mul(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    return [
        [sum(a[i][t] * b[t][j] for t in range(len(b))) for j in range(len(b[0]))]
        for i in range(len(a))
    ]


# Automorphism counting for finite abelian q-groups, three disjoint routes.


def aut_count_naive(q: int, partition: tuple[int, ...], chunk: int = 1 << 14) -> int:
    """Enumerate every endomorphism matrix and test bijectivity head-on.

    An endomorphism of prod Z_{q^{e_i}} is a matrix M with M[i][j] mod
    q^{e_i} and q^{e_j} M[i][j] = 0 mod q^{e_i}; bijectivity is checked
    by materializing the image of every group element and asking whether
    all images are distinct. Feasible only while the number of
    homomorphisms stays around a million.
    """
    exps = list(partition)
    k = len(exps)
    if k == 0:
        return 1
    mods = np.array([q**e for e in exps], dtype=np.int64)
    elements = np.array(
        list(itertools.product(*[range(int(m)) for m in mods])), dtype=np.int64
    )
    size = len(elements)
    entry_choices = []
    for i in range(k):
        for j in range(k):
            step = q ** max(0, exps[i] - exps[j])
            entry_choices.append(np.arange(0, int(mods[i]), step, dtype=np.int64))
    sizes = [len(c) for c in entry_choices]
    total = math.prod(sizes)
    # mixed-radix encode of image tuples so distinctness is a sort away
    radix = np.ones(k, dtype=np.int64)
    for i in range(k - 2, -1, -1):
        radix[i] = radix[i + 1] * mods[i + 1]
    count = 0
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        grid = np.arange(start, stop, dtype=np.int64)
        mats = np.empty((stop - start, k, k), dtype=np.int64)
        rest = grid
        for pos in range(k * k - 1, -1, -1):
            choices = entry_choices[pos]
            mats[:, pos // k, pos % k] = choices[rest % len(choices)]
            rest //= len(choices)
        images = np.einsum("hij,sj->hsi", mats, elements) % mods[None, None, :]
        codes = (images * radix[None, None, :]).sum(axis=2)
        codes.sort(axis=1)
        distinct = (codes[:, 1:] != codes[:, :-1]).all(axis=1)
        count += int(distinct.sum())
    return count


def _batch_invertible_gf2(rows: np.ndarray) -> np.ndarray:
    """Invertibility of many k x k F_2 matrices given as per-row bitmasks."""
    rows = rows.copy()
    n, k = rows.shape
    idx = np.arange(n)
    ok = np.ones(n, dtype=bool)
    used = np.zeros((n, k), dtype=bool)
    for col in range(k):
        bit = np.int64(1 << col)
        has = ((rows & bit) != 0) & ~used
        ok &= has.any(axis=1)
        pivot = has.argmax(axis=1)
        prow = rows[idx, pivot]
        used[idx, pivot] = True
        elim = (rows & bit) != 0
        elim[idx, pivot] = False
        rows ^= np.where(elim, prow[:, None], 0)
    return ok


def _batch_invertible_modq(mats: np.ndarray, q: int) -> np.ndarray:
    """Invertibility of many k x k matrices over F_q, plain elimination."""
    work = mats.astype(np.int64) % q
    n, k, _ = work.shape
    idx = np.arange(n)
    ok = np.ones(n, dtype=bool)
    used = np.zeros((n, k), dtype=bool)
    inverses = np.array([0] + [pow(v, q - 2, q) for v in range(1, q)], dtype=np.int64)
    for col in range(k):
        has = (work[:, :, col] != 0) & ~used
        ok &= has.any(axis=1)
        pivot = has.argmax(axis=1)
        used[idx, pivot] = True
        prow = work[idx, pivot] * inverses[work[idx, pivot, col]][:, None] % q
        factors = work[:, :, col].copy()
        factors[idx, pivot] = 0
        work = (work - factors[:, :, None] * prow[:, None, :]) % q
    return ok


def aut_count_skeleton(q: int, partition: tuple[int, ...], chunk: int = 1 << 20) -> int:
    """Automorphisms = (free lifts) x (invertible reductions mod q).

    A homomorphism is surjective exactly when its reduction on G/qG is,
    so the count factors into q^(number of base-q digits above the
    lowest) times the number of invertible digit matrices, which are
    enumerated outright and row-reduced in bulk.
    """
    exps = list(partition)
    k = len(exps)
    if k == 0:
        return 1
    free_digits = 0
    free_positions = []  # (i, j) whose lowest digit is unconstrained
    for i in range(k):
        for j in range(k):
            if exps[i] > exps[j]:
                free_digits += min(exps[i], exps[j])
            else:
                free_digits += exps[i] - 1
                free_positions.append((i, j))
    total = q ** len(free_positions)
    invertible = 0
    use_bits = q == 2
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        grid = np.arange(start, stop, dtype=np.int64)
        if use_bits:
            rows = np.zeros((stop - start, k), dtype=np.int64)
            for pos, (i, j) in enumerate(free_positions):
                digit = (grid >> pos) & 1
                rows[:, i] |= digit << j
            invertible += int(_batch_invertible_gf2(rows).sum())
        else:
            mats = np.zeros((stop - start, k, k), dtype=np.int64)
            scale = 1
            for (i, j) in free_positions:
                mats[:, i, j] = (grid // scale) % q
                scale *= q
            invertible += int(_batch_invertible_modq(mats, q).sum())
    return q**free_digits * invertible


def aut_count_subspace_dp(q: int, k: int) -> int:
    """|Aut((Z/q)^k)| as the number of ordered bases of an explicit vector set.

    Builds every subspace of F_q^k as a literal frozenset of encoded
    vectors by closure, then counts ordered independent tuples by
    dynamic programming over the subspace lattice. No rank or order
    formulas involved.
    """

    def encode(vec: tuple[int, ...]) -> int:
        out = 0
        for v in vec:
            out = out * q + v
        return out

    def decode(code: int) -> tuple[int, ...]:
        out = []
        for _ in range(k):
            out.append(code % q)
            code //= q
        return tuple(reversed(out))

    if q == 2:
        # base-2 encoding makes vector addition a plain xor
        def add(a: int, b: int) -> int:
            return a ^ b

        def scale(a: int, c: int) -> int:
            return a
    else:
        def add(a: int, b: int) -> int:
            av, bv = decode(a), decode(b)
            return encode(tuple((x + y) % q for x, y in zip(av, bv)))

        def scale(a: int, c: int) -> int:
            av = decode(a)
            return encode(tuple((x * c) % q for x in av))

    full = [encode(v) for v in itertools.product(range(q), repeat=k)]
    zero_space = frozenset({0})
    counts: dict[frozenset, int] = {zero_space: 1}
    for _ in range(k):
        nxt: dict[frozenset, int] = {}
        for space, ways in counts.items():
            outside = [v for v in full if v not in space]
            grown: dict[frozenset, int] = {}
            for v in outside:
                new = set(space)
                for c in range(1, q):
                    cv = scale(v, c)
                    new.update(add(s, cv) for s in space)
                key = frozenset(new)
                grown[key] = grown.get(key, 0) + 1
            for key, mult in grown.items():
                nxt[key] = nxt.get(key, 0) + ways * mult
        counts = nxt
    (space, ways), = counts.items()
    assert len(space) == q**k
    return ways
