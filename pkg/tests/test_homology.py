"""Smith forms, collapse, streaming ranks, and homology of known surfaces."""

import math
import random
from collections import Counter
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.groups import AbelianGroup
from torsionlab.homology import (
    HomologySummary,
    ModRankStream,
    SmithForm,
    SparseIntMatrix,
    betti_mod_q,
    collapse_reduce,
    fraction_free_rank,
    integer_homology,
    smith_normal_form,
)
from torsionlab.simplicial import ComplexState, boundary_matrix

from oracles import (
    in_span_mod,
    mat_mul,
    minor_gcd_invariants,
    random_unimodular,
    rank_fraction,
    rank_mod,
)

# Classical closed surfaces with complete 1-skeletons. Both nontrivial
# fixtures were located by exhaustive search and certified combinatorially
# below: every edge is in exactly two triangles, every vertex link is one
# cycle, so the Euler characteristic pins the surface type.
TETRA = (4, tuple(combinations(range(4), 3)))
RP2 = (
    6,
    (
        (0, 1, 2), (0, 1, 3), (0, 2, 4), (0, 3, 5), (0, 4, 5),
        (1, 2, 5), (1, 3, 4), (1, 4, 5), (2, 3, 4), (2, 3, 5),
    ),
)
TORUS = (
    7,
    (
        (0, 1, 3), (0, 1, 5), (0, 2, 3), (0, 2, 6), (0, 4, 5),
        (0, 4, 6), (1, 2, 4), (1, 2, 6), (1, 3, 4), (1, 5, 6),
        (2, 3, 5), (2, 4, 5), (3, 4, 6), (3, 5, 6),
    ),
)


def state_of(fixture) -> ComplexState:
    n, faces = fixture
    return ComplexState.from_faces(n, 2, faces)


def sparse_of(mat: list[list[int]]) -> SparseIntMatrix:
    entries = [
        (r, c, v) for r, row in enumerate(mat) for c, v in enumerate(row) if v
    ]
    return SparseIntMatrix(len(mat), len(mat[0]) if mat else 0, tuple(entries))


def random_matrix(rng, rows, cols, lo=-9, hi=9):
    return [[rng.randint(lo, hi) for _ in range(cols)] for _ in range(rows)]


class TestSparseIntMatrix:
    def test_rejects_stored_zero(self):
        with pytest.raises(ValueError):
            SparseIntMatrix(2, 2, ((0, 0, 0),))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SparseIntMatrix(2, 2, ((2, 0, 1),))

    def test_rejects_duplicate(self):
        with pytest.raises(ValueError):
            SparseIntMatrix(2, 2, ((0, 0, 1), (0, 0, 2)))

    def test_text_round_trip(self):
        m = SparseIntMatrix(3, 2, ((0, 1, -4), (2, 0, 7)))
        back = SparseIntMatrix.from_text(m.to_text())
        assert back == m
        empty = SparseIntMatrix(2, 3, ())
        assert SparseIntMatrix.from_text(empty.to_text()) == empty

    def test_to_dense(self):
        m = SparseIntMatrix(2, 2, ((0, 1, 5),))
        assert m.to_dense() == [[0, 5], [0, 0]]


class TestSmithForm:
    def test_chain_enforced(self):
        SmithForm((1, 2, 6))
        with pytest.raises(ValueError):
            SmithForm((2, 3))
        with pytest.raises(ValueError):
            SmithForm((0,))

    def test_rank(self):
        assert SmithForm((1, 1, 4)).rank == 3
        assert SmithForm(()).rank == 0


class TestSmithNormalForm:
    def test_hand_cases(self):
        assert smith_normal_form(sparse_of([[2, 0], [0, 6]])).invariants == (2, 6)
        assert smith_normal_form(sparse_of([[2, 0], [0, 3]])).invariants == (1, 6)
        assert smith_normal_form(sparse_of([[4, 6], [6, 9]])).invariants == (1,)
        assert smith_normal_form(sparse_of([[0, 0], [0, 0]])).invariants == ()
        assert smith_normal_form(sparse_of([[6]])).invariants == (6,)

    def test_against_minor_gcd_oracle(self):
        rng = random.Random(2024)
        for _ in range(120):
            rows = rng.randint(1, 5)
            cols = rng.randint(1, 5)
            mat = random_matrix(rng, rows, cols)
            got = smith_normal_form(sparse_of(mat)).invariants
            assert list(got) == minor_gcd_invariants(mat)

    def test_unimodular_invariance(self):
        rng = random.Random(77)
        for _ in range(40):
            k = rng.randint(2, 5)
            mat = random_matrix(rng, k, k)
            u = random_unimodular(k, rng)
            v = random_unimodular(k, rng)
            twisted = mat_mul(u, mat_mul(mat, v))
            assert (
                smith_normal_form(sparse_of(twisted)).invariants
                == smith_normal_form(sparse_of(mat)).invariants
            )

    def test_big_entries(self):
        big = 10**20
        inv = smith_normal_form(sparse_of([[big, 0], [0, 2]])).invariants
        assert inv == (2, big)


class TestSurfaceCertificates:
    """Re-verify the frozen fixtures so a typo cannot silently pass."""

    @pytest.mark.parametrize("fixture,chi", [(TETRA, 2), (RP2, 1), (TORUS, 0)])
    def test_closed_surface(self, fixture, chi):
        n, faces = fixture
        edge_count = Counter(e for f in faces for e in combinations(f, 2))
        assert len(edge_count) == math.comb(n, 2)
        assert all(v == 2 for v in edge_count.values())
        assert n - len(edge_count) + len(faces) == chi
        for v in range(n):
            link = [tuple(x for x in f if x != v) for f in faces if v in f]
            adj: dict[int, list[int]] = {}
            for a, b in link:
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
            assert all(len(nb) == 2 for nb in adj.values())
            prev, cur, steps = None, link[0][0], 0
            while True:
                nxt = [x for x in adj[cur] if x != prev]
                prev, cur = cur, nxt[0]
                steps += 1
                if cur == link[0][0]:
                    break
            assert steps == len(adj)


class TestIntegerHomology:
    def test_sphere(self):
        s = state_of(TETRA)
        assert integer_homology(s, 1) == HomologySummary(0, AbelianGroup(()))
        assert integer_homology(s, 2) == HomologySummary(1, AbelianGroup(()))

    def test_projective_plane(self):
        s = state_of(RP2)
        assert integer_homology(s, 1) == HomologySummary(0, AbelianGroup((2,)))
        assert integer_homology(s, 2) == HomologySummary(0, AbelianGroup(()))

    def test_torus(self):
        s = state_of(TORUS)
        assert integer_homology(s, 1) == HomologySummary(2, AbelianGroup(()))
        assert integer_homology(s, 2) == HomologySummary(1, AbelianGroup(()))

    def test_rejects_low_degree(self):
        with pytest.raises(ValueError):
            integer_homology(state_of(TETRA), 0)

    def test_agrees_with_unreduced_route(self):
        # collapse-accelerated result vs full boundary matrix plus oracle rank
        rng = random.Random(4242)
        for _ in range(20):
            n = rng.randrange(5, 8)
            pool = list(combinations(range(n), 3))
            faces = rng.sample(pool, rng.randrange(1, len(pool) + 1))
            s = ComplexState.from_faces(n, 2, faces)
            full = boundary_matrix(s, 2)
            invs = smith_normal_form(full).invariants
            assert rank_fraction(full.to_dense()) == len(invs)
            expect_b1 = math.comb(n, 2) - (n - 1) - len(invs)
            expect_t = AbelianGroup(tuple(v for v in invs if v > 1))
            assert integer_homology(s, 1) == HomologySummary(expect_b1, expect_t)
            assert integer_homology(s, 2).betti == len(faces) - len(invs)


class TestBettiModQ:
    def test_surfaces(self):
        rp2 = state_of(RP2)
        assert betti_mod_q(rp2, 1, 2) == 1
        assert betti_mod_q(rp2, 2, 2) == 1
        assert betti_mod_q(rp2, 1, 3) == 0
        assert betti_mod_q(rp2, 2, 3) == 0
        torus = state_of(TORUS)
        for q in (2, 3, 5):
            assert betti_mod_q(torus, 1, q) == 2
            assert betti_mod_q(torus, 2, q) == 1

    def test_connected_bottom(self):
        # complete bottom skeleton: one component, any coefficients
        for fixture in (TETRA, RP2, TORUS):
            assert betti_mod_q(state_of(fixture), 0, 2) == 1
            assert betti_mod_q(state_of(fixture), 0, 3) == 1

    def test_rejects_composite_modulus(self):
        with pytest.raises(ValueError):
            betti_mod_q(state_of(TETRA), 1, 4)

    def test_rejects_bad_degree(self):
        with pytest.raises(ValueError):
            betti_mod_q(state_of(TETRA), 3, 2)


class TestCollapse:
    def test_single_triangle_collapses_fully(self):
        s = ComplexState.from_faces(4, 2, [(0, 1, 2)])
        assert collapse_reduce(s) == ((), ())

    def test_cone_collapses_fully(self):
        s = ComplexState.from_faces(5, 2, [(0, 1, 2), (0, 2, 3), (0, 3, 4)])
        assert collapse_reduce(s) == ((), ())

    def test_closed_surface_is_rigid(self):
        for fixture in (TETRA, RP2, TORUS):
            s = state_of(fixture)
            facets, kept = collapse_reduce(s)
            assert kept == s.sorted_faces()
            assert len(facets) == math.comb(s.n, 2)

    def test_survivors_are_subcomplex_faces(self):
        rng = random.Random(99)
        for _ in range(20):
            n = 7
            pool = list(combinations(range(n), 3))
            faces = rng.sample(pool, rng.randrange(1, 25))
            s = ComplexState.from_faces(n, 2, faces)
            facets, kept = collapse_reduce(s)
            assert set(kept) <= set(faces)
            under = {e for f in kept for e in combinations(f, 2)}
            assert set(facets) == under


class TestModRankStream:
    @given(st.integers(0, 10**6), st.sampled_from([2, 3, 5, 10007]))
    @settings(max_examples=30, deadline=None)
    def test_rank_matches_oracle(self, seed, q):
        rng = np.random.default_rng(seed)
        rows, cols = int(rng.integers(3, 12)), int(rng.integers(1, 14))
        dense = np.zeros((rows, cols), dtype=np.int64)
        stream = ModRankStream(rows, q, capacity=rows, max_terms=4)
        for j in range(cols):
            support = rng.choice(rows, size=min(rows, 3), replace=False)
            vals = rng.integers(-5, 6, size=len(support))
            dense[support, j] = vals
            stream.push(list(support), list(vals))
        assert stream.rank == rank_mod(dense, q)

    def test_in_span_matches_oracle(self):
        rng = np.random.default_rng(5)
        q = 7
        rows = 10
        stream = ModRankStream(rows, q, capacity=rows, max_terms=3)
        basis = []
        for _ in range(6):
            support = rng.choice(rows, size=3, replace=False)
            vals = rng.integers(1, q, size=3)
            col = np.zeros(rows, dtype=np.int64)
            col[support] = vals
            stream.push(list(support), list(vals))
            basis.append(col)
        mat = np.column_stack(basis)
        for _ in range(40):
            support = rng.choice(rows, size=3, replace=False)
            vals = rng.integers(1, q, size=3)
            vec = np.zeros(rows, dtype=np.int64)
            vec[support] = vals
            assert stream.in_span(list(support), list(vals)) == in_span_mod(
                mat, vec, q
            )

    def test_batch_matches_single(self):
        rng = np.random.default_rng(11)
        q = 10007
        rows = 30
        stream = ModRankStream(rows, q, capacity=rows, max_terms=3)
        for _ in range(12):
            support = rng.choice(rows, size=3, replace=False)
            stream.push(list(support), [1, -1, 1])
        cand = np.array(
            [sorted(rng.choice(rows, size=3, replace=False)) for _ in range(50)],
            dtype=np.int64,
        )
        batch = stream.batch_in_span(cand, [1, -1, 1])
        for i in range(len(cand)):
            assert batch[i] == stream.in_span(list(cand[i]), [1, -1, 1])

    def test_window_flush_consistency(self):
        # push enough columns to cross the deferred-update window
        q = 10007
        rows = 160
        rng = np.random.default_rng(3)
        dense = np.zeros((rows, 140), dtype=np.int64)
        stream = ModRankStream(rows, q, capacity=rows, max_terms=4)
        for j in range(140):
            support = rng.choice(rows, size=4, replace=False)
            vals = rng.integers(1, q, size=4)
            dense[support, j] = vals
            stream.push(list(support), list(vals))
        assert stream.rank == rank_mod(dense, q)

    def test_rejects_composite(self):
        with pytest.raises(ValueError):
            ModRankStream(5, 6, capacity=5)

    def test_rejects_oversized_modulus(self):
        with pytest.raises(ValueError):
            ModRankStream(10**4, 2_000_003, capacity=10**4)


class TestFractionFreeRank:
    @given(st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_matches_fraction_gauss(self, seed):
        rng = random.Random(seed)
        rows, cols = rng.randint(1, 7), rng.randint(1, 7)
        mat = random_matrix(rng, rows, cols, -20, 20)
        assert fraction_free_rank(mat) == rank_fraction(mat)

    def test_empty(self):
        assert fraction_free_rank([]) == 0
