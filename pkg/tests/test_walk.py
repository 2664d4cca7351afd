import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundwalk.errors import NotUnitaryError, WalkError
from boundwalk.walk import (HADAMARD, PAULI_X, SINGLET, TRIPLET_ZERO, UnitaryCoin, WalkSymbol,
                            antisymmetric_projector, coin_shift_walk, exchange_operator, flat_walk,
                            haar_coin, hadamard_coin, hadamard_walk, relative_stride, relative_symbol,
                            rotation_coin, shift_coin_walk, singlet_collision_coin, symmetric_basis,
                            symmetric_collision_coin, two_particle_symbol)

angles = st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False)


def test_unitary_coin_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        UnitaryCoin(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_unitary_coin_stores_residual():
    c = hadamard_coin()
    assert c.dim == 2
    assert c.residual <= 1e-15


def test_unitary_coin_rejects_non_square():
    with pytest.raises(WalkError):
        UnitaryCoin(np.ones((2, 3)))


def test_hadamard_symbol_at_zero_and_pi():
    w = hadamard_walk()
    np.testing.assert_allclose(w(0.0), np.array([[1, 1], [1, -1]]) / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(w(math.pi), np.array([[-1, -1], [-1, 1]]) / math.sqrt(2), atol=1e-15)


def test_hadamard_symbol_terms():
    # S(p) H has one term per shift direction
    w = hadamard_walk()
    assert set(w.terms) == {(1,), (-1,)}
    assert w.neighborhood_size == 1 and w.dim == 2 and w.lattice_dim == 1


def test_hadamard_eigenphases_closed_form():
    # det W = -1 and tr W = i sqrt2 sin p, so the eigenvalues are
    # exp(i w) and -exp(-i w) with sin w = sin p / sqrt2.
    w = hadamard_walk()
    for p in (math.pi / 2, 0.3, -1.1):
        dense = np.sort(np.angle(np.linalg.eigvals(w(p))))
        om = math.asin(math.sin(p) / math.sqrt(2))
        closed = np.sort(np.angle([np.exp(1j * om), -np.exp(-1j * om)]))
        np.testing.assert_allclose(dense, closed, atol=1e-12)


def test_hadamard_max_group_velocity_is_inverse_sqrt2():
    p = np.linspace(-math.pi, math.pi, 4001)
    om = np.arcsin(np.sin(p) / math.sqrt(2))
    v = np.gradient(om, p)
    assert abs(np.max(np.abs(v)) - 1 / math.sqrt(2)) < 1e-5


def test_symbol_rejects_non_unitary_terms():
    with pytest.raises(NotUnitaryError):
        WalkSymbol({1: np.eye(2), -1: np.eye(2)})


def test_symbol_rejects_bad_key():
    with pytest.raises(WalkError):
        WalkSymbol({(1, 0): np.eye(2)}, lattice_dim=1)


@settings(max_examples=50, deadline=None)
@given(angles)
def test_shift_coin_walk_is_unitary(p):
    c = rotation_coin(0.7, "y")
    u = shift_coin_walk(c)(p)
    assert np.max(np.abs(u.conj().T @ u - np.eye(2))) <= 1e-12


def test_coin_shift_walk_identity_coins_collapse():
    # identity outer coins and sigma_x in between give sigma(p1 + p2)
    w = flat_walk(2, 0.0)
    rng = np.random.default_rng(3)
    for p1, p2 in rng.uniform(-math.pi, math.pi, size=(20, 2)):
        ev = np.linalg.eigvals(w(p1, p2))
        np.testing.assert_allclose(np.sort(ev.real), [-1, 1], atol=1e-12)
        assert np.max(np.abs(ev.imag)) < 1e-12


def test_literal_identity_coins_do_not_give_pm1():
    # the literal all-identity product sigma(p1) sigma(p2) has phases +-(p1 - p2)
    w = coin_shift_walk([UnitaryCoin.identity(2)] * 3, 2)
    ph = np.sort(np.angle(np.linalg.eigvals(w(0.9, 0.2))))
    np.testing.assert_allclose(ph, [-0.7, 0.7], atol=1e-12)


def test_coin_shift_walk_one_dim_hadamard_unitary():
    w = coin_shift_walk([UnitaryCoin.identity(2), hadamard_coin()], 1)
    assert w.unitarity_residual(64) <= 1e-12


def test_coin_shift_walk_wrong_dimension():
    with pytest.raises(WalkError):
        coin_shift_walk([UnitaryCoin.identity(3), hadamard_coin()], 1)
    with pytest.raises(WalkError):
        coin_shift_walk([hadamard_coin()], 1)


def test_flat_walk_perturbed_stays_near_pm1():
    w = flat_walk(2, 0.1)
    ph = w.eigenphases(64)
    dist = np.minimum(np.abs(ph), math.pi - np.abs(ph))
    assert dist.max() < 0.5


def test_two_particle_symbol_examples():
    w = hadamard_walk()
    np.testing.assert_allclose(two_particle_symbol(w, 0, 0), np.kron(HADAMARD, HADAMARD), atol=1e-15)
    np.testing.assert_allclose(two_particle_symbol(w, math.pi, math.pi / 2),
                               np.kron(w(math.pi), w(0.0)), atol=1e-15)


def test_two_particle_symbol_against_independent_factors():
    w = hadamard_walk()
    grid = np.linspace(-math.pi, math.pi, 8, endpoint=False)
    for p in grid:
        for k in grid:
            a = p / 2 + k
            b = p / 2 - k
            f1 = np.diag([np.exp(1j * a), np.exp(-1j * a)]) @ HADAMARD
            f2 = np.diag([np.exp(1j * b), np.exp(-1j * b)]) @ HADAMARD
            np.testing.assert_allclose(two_particle_symbol(w, p, k), np.kron(f1, f2), atol=1e-14)


def test_relative_symbol_center_gauge_is_the_pair_symbol():
    w = hadamard_walk()
    rel = relative_symbol(w, [0.8], gauge="center")
    for k in (0.1, 1.3, -2.0):
        np.testing.assert_allclose(rel(k), two_particle_symbol(w, 0.8, k), atol=1e-14)


def test_relative_symbol_reduced_stride():
    w = hadamard_walk()
    assert relative_stride(w) == 2
    rel = relative_symbol(w, [0.8], gauge="center", reduced=True)
    assert set(rel.terms) == {(-1,), (0,), (1,)}
    np.testing.assert_allclose(rel(0.6), two_particle_symbol(w, 0.8, 0.3), atol=1e-14)


def test_ring_and_center_gauges_differ_by_momentum_shift():
    w = hadamard_walk()
    ring = relative_symbol(w, [1.1], "ring")
    center = relative_symbol(w, [1.1], "center")
    for k in (0.2, -1.7, 3.0):
        np.testing.assert_allclose(center(k), ring(k + 0.55), atol=1e-14)


def test_exchange_and_singlet():
    f = exchange_operator(2)
    np.testing.assert_allclose(f @ SINGLET, -SINGLET)
    np.testing.assert_allclose(f @ TRIPLET_ZERO, TRIPLET_ZERO)
    assert abs(np.vdot(SINGLET, TRIPLET_ZERO)) < 1e-15


def test_singlet_collision_coin_acts_on_singlet_only():
    g = singlet_collision_coin(-1)
    np.testing.assert_allclose(g.matrix @ SINGLET, -SINGLET)
    for v in symmetric_basis(2).T:
        np.testing.assert_allclose(g.matrix @ v, v, atol=1e-15)
    with pytest.raises(WalkError):
        singlet_collision_coin(2.0)


def test_symmetric_collision_coin_commutes_with_exchange():
    u = haar_coin(3, np.random.default_rng(5))
    g = symmetric_collision_coin(u)
    f = exchange_operator(2)
    assert np.max(np.abs(g.matrix @ f - f @ g.matrix)) < 1e-14
    np.testing.assert_allclose(g.matrix @ SINGLET, SINGLET, atol=1e-15)


def test_antisymmetric_projector_rank_one_for_qubits():
    assert round(np.trace(antisymmetric_projector(2)).real) == 1


def test_coin_composition():
    x = UnitaryCoin(PAULI_X)
    assert np.allclose((x @ x).matrix, np.eye(2))
