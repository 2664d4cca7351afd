import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundwalk.errors import EigenConditionError, SingularDefectError, SpectralProximityError, WalkError
from boundwalk.molecule import dispersion, pole_v1
from boundwalk.spectral import (GapArc, band_gap, check_unitarity_lemma, circular_distance, compute_R,
                                defect_coin_for, defect_ring_matrix, defect_walk_residual, distance_to_set,
                                eigenvector_from_defect, refined_R, ring_momenta, ring_spectrum)
from boundwalk.walk import (SINGLET, UnitaryCoin, WalkSymbol, flat_walk, haar_coin, hadamard_walk,
                            relative_symbol, singlet_collision_coin)

W = hadamard_walk()


def pair(p, gauge="center", reduced=True):
    return relative_symbol(W, [p], gauge=gauge, reduced=reduced)


def random_four_level_walk(seed, far=None):
    """Haar coin followed by a shift of each level; ``far=None`` leaves the
    last two levels in place."""
    c = haar_coin(4, np.random.default_rng(seed)).matrix
    proj = np.eye(4)
    if far is None:
        return WalkSymbol({1: np.diag(proj[0]) @ c, -1: np.diag(proj[1]) @ c,
                           0: np.diag(proj[2] + proj[3]) @ c})
    return WalkSymbol({1: np.diag(proj[0]) @ c, -1: np.diag(proj[1]) @ c,
                       far: np.diag(proj[2]) @ c, -far: np.diag(proj[3]) @ c})


def test_constant_walk_defect_operator_is_one_half():
    # W = 1 has its whole spectrum at 1, so z = -1 is a gap point and
    # R = 1 / (1 - z) = 1/2 exactly
    r = compute_R(-1, WalkSymbol({0: np.eye(1)}), 8)
    assert abs(r.matrix[0, 0] - 0.5) < 1e-15
    assert r.quadrature_residual < 1e-15


def test_pure_shift_has_no_gap():
    # the scalar shift e^{ik} covers the whole circle, so z = -1 is refused
    with pytest.raises(SpectralProximityError):
        compute_R(-1, WalkSymbol({1: np.eye(1)}), 64)


def test_z_off_circle_rejected():
    with pytest.raises(WalkError):
        compute_R(0.5, WalkSymbol({0: np.eye(1)}), 8)


def test_hermitian_part_identity_for_pair_symbol():
    # z = exp(0.45 i pi) lies in the gap of the pair at p = pi/2
    z = np.exp(0.45j * math.pi)
    assert any(a.contains(0.45 * math.pi) for a in band_gap(pair(math.pi / 2, "ring", False)))
    r = compute_R(z, pair(math.pi / 2, "ring", False), 2048)
    assert r.grid_points == 4096
    assert np.max(np.abs(r.matrix + r.matrix.conj().T - np.eye(4))) <= 1e-10


def test_singlet_scalar_defect_operator_against_residues():
    # exact residue evaluation (computer algebra) gives R_ss(i) = 1/2 at p = pi/2
    r = compute_R(1j, pair(math.pi / 2), 1024, subspace=SINGLET)
    assert r.dim == 1
    assert abs(r.matrix[0, 0] - 0.5) <= 1e-10


def test_defect_coin_scalar_case():
    r = compute_R(-1, WalkSymbol({0: np.eye(1)}), 8)
    assert abs(defect_coin_for(-1, r).matrix[0, 0] + 1) < 1e-14


def test_defect_coin_hadamard_singlet_gives_g_pi():
    r = compute_R(1j, pair(math.pi / 2), 1024, subspace=SINGLET)
    gamma = defect_coin_for(1j, r).matrix[0, 0]
    assert abs(gamma - np.exp(1j * math.pi)) < 1e-10


def test_defect_coin_singular_reports_condition():
    from boundwalk.spectral import DefectOperator
    r = DefectOperator(1j, np.diag([1.0, 1e-14]), 0.0, 0)
    with pytest.raises(SingularDefectError) as info:
        defect_coin_for(1j, r)
    assert info.value.condition_number > 1e12


def test_defect_synthesis_random_four_level_walk_ring64():
    w = random_four_level_walk(0)
    arc = max(band_gap(w, 512), key=lambda a: a.width)
    z = np.exp(1j * arc.midpoint)
    coin = defect_coin_for(z, refined_R(z, w))
    phases = np.angle(np.linalg.eigvals(defect_ring_matrix(w, coin, 64)))
    close = np.sum(circular_distance(phases, arc.midpoint) < 1e-6)
    # z appears with multiplicity equal to the defect dimension
    assert close == 4


def test_lemma_report_on_computed_R():
    # at zero total momentum the pair bands are {1} and the left half circle
    rep = check_unitarity_lemma(compute_R(np.exp(0.25j * math.pi), pair(0.0, "ring", False), 512))
    assert rep.passed and rep.hermitian_residual < 1e-12 and rep.unitarity_residual < 1e-12


def test_lemma_report_synthetic_cases():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    k = a + a.conj().T
    rep = check_unitarity_lemma(0.5 * (np.eye(3) + 1j * k))
    assert rep.hermitian_residual == 0.0 and rep.unitarity_residual <= 1e-12 and rep.passed
    bad = check_unitarity_lemma(0.6 * np.eye(2))
    assert bad.hermitian_residual == pytest.approx(0.2) and not bad.passed


def test_ring_momenta():
    p = ring_momenta(28)
    assert p.size == 28 and p.max() == pytest.approx(math.pi) and p.min() > -math.pi


def test_ring_spectrum_free_case_has_no_gap_states():
    table = ring_spectrum(28, W, UnitaryCoin.identity(4))
    assert table.gap_count() == 0
    assert all(r.phases.size == 28 * 4 for r in table.rows)


def test_ring_spectrum_requires_four_sites():
    with pytest.raises(WalkError):
        ring_spectrum(3, W, UnitaryCoin.identity(4))


@pytest.mark.parametrize("g", [math.pi, math.pi / 2, math.pi / 4])
def test_ring_spectrum_matches_dispersion_m56(g):
    table = ring_spectrum(56, W, singlet_collision_coin(np.exp(1j * g)))
    assert table.gap_count() > 0
    for row in table.rows:
        points = [pt for pt in dispersion(row.p, g) if pt.allowed]
        allowed = [pt.omega for pt in points]
        for ph in row.gap_phases:
            assert allowed and distance_to_set(ph, allowed)[0] <= 1e-8
        for pt in points:
            # the ring shifts a state with tail ratio |v1| by about |v1|^(M/2)
            if abs(pole_v1(row.p, g, pt.branch)) ** 28 < 1e-9:
                assert distance_to_set(pt.omega, row.phases)[0] <= 1e-8


def test_ring_spectrum_reflection_symmetry():
    # reversing the momentum conjugates the spectrum of this walk
    table = ring_spectrum(28, W, singlet_collision_coin(-1))
    for row in table.rows:
        if abs(abs(row.p) - math.pi) < 1e-12:
            continue
        other = table.row_at(-row.p)
        assert np.max(distance_to_set(-row.phases, other.phases)) <= 1e-10


def test_ring_spectrum_band_counts_unchanged_by_defect():
    free = ring_spectrum(28, W, UnitaryCoin.identity(4))
    inter = ring_spectrum(28, W, singlet_collision_coin(-1))
    for a, b in zip(free.rows, inter.rows):
        assert abs(int((~a.in_gap).sum()) - int((~b.in_gap).sum())) <= 2


def test_band_gap_flat_walk_excludes_pm1():
    arcs = band_gap(flat_walk(2, 0.0), 64)
    assert len(arcs) == 2
    for arc in arcs:
        assert arc.width > 2.5
        assert not arc.contains(0.0) and not arc.contains(math.pi)
    assert any(a.contains(math.pi / 2) for a in arcs) and any(a.contains(-math.pi / 2) for a in arcs)


def test_band_gap_hadamard_pair_at_zero_momentum():
    # bands are the point 1 and the arc [pi/2, 3pi/2]
    arcs = band_gap(pair(0.0, "ring", False), 512)
    assert len(arcs) == 2
    assert any(a.contains(math.pi / 4) for a in arcs) and any(a.contains(-math.pi / 4) for a in arcs)
    for a in arcs:
        assert not a.contains(0.0) and not a.contains(math.pi)
        assert a.width == pytest.approx(math.pi / 2, abs=0.05)


def test_band_gap_empty_for_covering_bands():
    w = random_four_level_walk(3, far=3)
    ph = np.sort(np.mod(w.eigenphases(4096).ravel(), 2 * math.pi))
    assert np.max(np.diff(np.concatenate([ph, [ph[0] + 2 * math.pi]]))) < 0.01
    assert band_gap(w, 1024) == []


def test_gap_arc_geometry():
    arc = GapArc(3.0, 0.5)
    assert arc.contains(3.2) and arc.contains(-2.9) and not arc.contains(2.9)
    assert arc.end == pytest.approx(3.5 - 2 * math.pi)


def test_eigenvector_strict_localization():
    rel = pair(math.pi / 2)
    vec = eigenvector_from_defect(SINGLET, 1j, rel, singlet_collision_coin(-1), cutoff=6)
    norms = np.linalg.norm(vec.amplitudes, axis=1)
    outside = np.abs(vec.positions) > 1
    assert norms[outside].max() < 1e-14 and norms[~outside].min() > 0.1


def test_eigenvector_tail_ratio_one_third():
    z = np.exp(1j * math.acos(1 / 3))
    vec = eigenvector_from_defect(SINGLET, z, pair(0.0), singlet_collision_coin(-1), cutoff=12)
    n = [np.linalg.norm(vec.at(-j)) for j in range(1, 10)]
    for a, b in zip(n[1:], n[2:]):
        assert abs(b / a - 1 / 3) < 1e-8


def test_eigenvector_ring_residual():
    g = 0.8
    pt = [q for q in dispersion(0.4, g) if q.allowed][0]
    rel = pair(0.4)
    coin = singlet_collision_coin(np.exp(1j * g))
    vec = eigenvector_from_defect(SINGLET, pt.z, rel, coin, cutoff=120, grid_points=8192)
    res = defect_walk_residual(rel, coin, pt.z, vec.positions, vec.amplitudes)
    assert res <= 1e-6


def test_eigenvector_rejects_wrong_defect_vector():
    with pytest.raises(EigenConditionError):
        eigenvector_from_defect(SINGLET, 1j, pair(math.pi / 2), singlet_collision_coin(np.exp(0.5j)), cutoff=3)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-math.pi, max_value=math.pi), st.floats(min_value=0.02, max_value=0.98))
def test_unitarity_lemma_random_gap_points(p, frac):
    rel = pair(p, "ring", False)
    arc = max(band_gap(rel, 256), key=lambda a: a.width)
    z = np.exp(1j * (arc.start + frac * arc.width))
    rep = check_unitarity_lemma(refined_R(z, rel, tol=1e-12, max_points=1 << 16))
    assert rep.hermitian_residual <= 1e-9 and rep.unitarity_residual <= 1e-9
