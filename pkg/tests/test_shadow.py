"""Shadow membership, cores, giants, and the three-event hitting report."""

import logging
import math
from itertools import combinations

import pytest

from torsionlab.groups import AbelianGroup
from torsionlab.homology import betti_mod_q
from torsionlab.lmprocess import LTResult, ProcessTrace
from torsionlab.shadow import (
    CoreComplex,
    HittingReport,
    core,
    giant_check,
    giant_threshold,
    hitting_time_experiment,
    shadow,
    shadow_size,
)
from torsionlab.simplicial import ComplexState, enumerate_faces

from test_homology import RP2, TETRA, TORUS, state_of

Z2 = AbelianGroup((2,))
Q = 10007


def shadow_oracle(state: ComplexState, q: int) -> frozenset:
    """Absent faces whose addition raises the top Betti number over F_q."""
    base = betti_mod_q(state, state.d, q)
    out = set()
    for f in enumerate_faces(state.n, state.d):
        if f in state.faces:
            continue
        bigger = ComplexState(state.n, state.d, state.faces | {f})
        if betti_mod_q(bigger, state.d, q) > base:
            out.add(f)
    return frozenset(out)


class TestShadow:
    def test_open_tetrahedron_hand_case(self):
        s = ComplexState.from_faces(5, 2, [(0, 1, 2), (0, 1, 3), (0, 2, 3)])
        assert shadow(s) == frozenset({(1, 2, 3)})
        assert shadow_size(s) == 1

    def test_empty_and_complete(self):
        assert shadow(ComplexState(5, 2, frozenset())) == frozenset()
        full = ComplexState.from_faces(5, 2, enumerate_faces(5, 2))
        assert shadow(full) == frozenset()

    def test_against_betti_oracle(self):
        import random

        rng = random.Random(31)
        pool = enumerate_faces(6, 2)
        for _ in range(25):
            faces = rng.sample(pool, rng.randrange(1, len(pool)))
            s = ComplexState.from_faces(6, 2, faces)
            assert shadow(s, Q) == shadow_oracle(s, Q)

    def test_closed_surfaces(self):
        for fixture in (TETRA, RP2, TORUS):
            s = state_of(fixture)
            assert shadow(s, Q) == shadow_oracle(s, Q)


class TestCore:
    def test_rejects_free_face(self):
        with pytest.raises(ValueError):
            CoreComplex(4, 2, frozenset({(0, 1, 2)}))

    def test_closed_surface_is_its_own_core(self):
        for fixture in (TETRA, RP2, TORUS):
            s = state_of(fixture)
            assert core(s).faces == s.faces

    def test_collapsible_complex_has_empty_core(self):
        s = ComplexState.from_faces(5, 2, [(0, 1, 2), (0, 2, 3), (0, 3, 4)])
        assert core(s).faces == frozenset()
        assert core(ComplexState(5, 2, frozenset())).faces == frozenset()

    def test_dangling_part_removed(self):
        faces = set(TETRA[1]) | {(4, 5, 6)}
        s = ComplexState.from_faces(7, 2, faces)
        assert core(s).faces == frozenset(TETRA[1])

    def test_subfaces_and_support(self):
        cc = core(state_of(TETRA))
        assert cc.subfaces() == frozenset(combinations(range(4), 2))
        assert cc.vertex_support() == frozenset(range(4))


class TestGiantCheck:
    def test_projective_plane_is_a_giant(self):
        assert giant_check(state_of(RP2), Z2)

    def test_wrong_group_fails(self):
        assert not giant_check(state_of(RP2), AbelianGroup((3,)))
        assert not giant_check(state_of(TETRA), Z2)

    def test_positive_betti_fails(self):
        assert not giant_check(state_of(TORUS), Z2)

    def test_missing_vertex_fails(self):
        s = ComplexState.from_faces(7, 2, RP2[1])
        assert not giant_check(s, Z2)

    def test_empty_core_fails(self):
        s = ComplexState.from_faces(6, 2, [(0, 1, 2)])
        assert not giant_check(s, Z2)

    def test_trivial_target_rejected(self):
        with pytest.raises(ValueError):
            giant_check(state_of(RP2), AbelianGroup(()))


class TestGiantThreshold:
    def test_scaling(self):
        assert giant_threshold(50, 2) == pytest.approx(0.02 * 50**3)
        assert giant_threshold(10, 3) == pytest.approx(0.02 * 10**4)
        assert giant_threshold(60, 2) > giant_threshold(50, 2)

    def test_custom_delta(self):
        assert giant_threshold(10, 2, delta=0.5) == pytest.approx(500.0)


def rp2_trace() -> ProcessTrace:
    """All 20 triangles on 6 vertices, the projective plane first."""
    rest = [f for f in enumerate_faces(6, 2) if f not in set(RP2[1])]
    return ProcessTrace(6, 2, tuple(RP2[1]) + tuple(rest), seed=0)


def rp2_result() -> LTResult:
    return LTResult(Z2, 10, (), False)


class TestHittingReport:
    def test_coincide_flag_must_match(self):
        HittingReport(5, 5, 5, True)
        HittingReport(5, 5, 6, False)
        HittingReport(5, None, 5, False)
        with pytest.raises(ValueError):
            HittingReport(5, 5, 5, False)
        with pytest.raises(ValueError):
            HittingReport(5, 5, 6, True)
        with pytest.raises(ValueError):
            HittingReport(None, None, None, True)


class TestHittingTimeExperiment:
    def test_burst_and_giant_on_seeded_trace(self):
        rep = hitting_time_experiment(
            rp2_trace(), rp2_result(), threshold=0.5, back=9, fwd=9
        )
        assert rep.m_burst == 10
        # the projective plane is already a spanning core with the right group
        assert rep.m_giant == 10
        assert rep.m_shadow is not None
        trace = rp2_trace()
        assert shadow_size(trace.prefix_state(rep.m_shadow)) > 0.5
        assert shadow_size(trace.prefix_state(rep.m_shadow - 1)) <= 0.5

    def test_huge_threshold_gives_no_crossing(self):
        rep = hitting_time_experiment(
            rp2_trace(), rp2_result(), threshold=1e9, back=9, fwd=9
        )
        assert rep.m_shadow is None
        assert not rep.coincide

    def test_saturated_at_window_edge_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="torsionlab.shadow"):
            rep = hitting_time_experiment(
                rp2_trace(), rp2_result(), threshold=-1.0, back=9, fwd=9
            )
        assert rep.m_shadow is None
        assert any("not located" in r.message for r in caplog.records)

    def test_rejects_trivial_result(self):
        trivial = LTResult(AbelianGroup(()), None, (), True)
        with pytest.raises(ValueError):
            hitting_time_experiment(rp2_trace(), trivial)
