import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocycle_reduce.arithmetic import expand, golden_alpha
from cocycle_reduce.cocycle import (
    Cocycle,
    DecomposedCocycle,
    almost_mathieu_potential,
    conformal_part,
    decompose,
    iterate,
    iterated_defect,
    lyapunov,
    q_matrix,
    q_project,
    rotation_number,
    schrodinger,
)
from cocycle_reduce.errors import NotNearRotation
from cocycle_reduce.torusfun import MatFn, TorusFn, birkhoff_sum, random_trig_poly, rotation_mat, sup_norm

from instances import near_rotation, random_defect, random_elliptic_phi
from oracles import am_sites, naive_iterate, rho_from_ids, sturm_ids, transfer_lyapunov

GOLDEN = golden_alpha()
G = float(GOLDEN[0])
FREE = TorusFn([0.0])
seeds = st.integers(0, 2**32 - 1)


def sup_diff(A, B, M=512):
    x = np.arange(M) / M
    D = A(x) - B(x)
    return float(np.sqrt((D**2).sum(axis=(1, 2))).max())


def random_matfn(rng, N=4):
    return MatFn.from_entries([[random_trig_poly(rng, N) for _ in range(2)] for _ in range(2)])


# schrodinger --------------------------------------------------------------


def test_free_cocycles():
    assert np.array_equal(schrodinger(FREE, 0.0, GOLDEN).A.mean_matrix(), [[0, -1], [1, 0]])
    A = schrodinger(FREE, 1.0, GOLDEN).A.mean_matrix()
    assert np.array_equal(A, [[1, -1], [1, 0]])
    assert np.trace(A) == 1.0


def test_almost_mathieu_entry_has_three_modes():
    c = schrodinger(almost_mathieu_potential(0.3), 0.7, GOLDEN)
    e = c.A.entry(0, 0).coeffs
    assert c.A.bandwidth == 1
    assert np.count_nonzero(e) == 2  # modes 0 and +-1
    assert c.A.sl2 and c.det_error() <= 1e-15


def test_cocycle_json_round_trip():
    c = schrodinger(almost_mathieu_potential(0.3), 0.7, GOLDEN)
    d = Cocycle.from_json(c.to_json())
    assert d.alpha == c.alpha
    assert np.array_equal(d.A.coeffs, c.A.coeffs)


# iterate ------------------------------------------------------------------


def test_iterate_small_n():
    rng = np.random.default_rng(0)
    A = near_rotation(rng, random_elliptic_phi(rng), 1e-2)
    c = Cocycle.make(GOLDEN, A)
    assert np.array_equal(iterate(c, 1).coeffs, A.coeffs)
    x = np.arange(256) / 256
    ref = naive_iterate(lambda y: np.moveaxis(A(y), 0, -1), G, 2, x)
    assert np.max(np.abs(np.moveaxis(iterate(c, 2)(x), 0, -1) - ref)) <= 1e-13


def test_iterate_13_matches_naive():
    rng = np.random.default_rng(1)
    c = Cocycle.make(GOLDEN, near_rotation(rng, random_elliptic_phi(rng), 1e-2))
    x = np.arange(256) / 256
    ref = naive_iterate(lambda y: np.moveaxis(c.A(y), 0, -1), G, 13, x)
    got = np.moveaxis(iterate(c, 13)(x), 0, -1)
    assert np.max(np.sqrt(((got - ref) ** 2).sum(axis=(0, 1)))) <= 1e-11
    assert sup_diff(iterate(c, 13), iterate(c, 13, naive=True)) <= 1e-11


@settings(max_examples=10, deadline=None)
@given(seeds, st.integers(1, 50), st.integers(1, 50))
def test_cocycle_property(seed, m, k):
    rng = np.random.default_rng(seed)
    c = Cocycle.make(GOLDEN, near_rotation(rng, random_elliptic_phi(rng), 1e-2))
    lhs = iterate(c, m + k)
    rhs = iterate(c, m).translate(GOLDEN[0] * k) @ iterate(c, k)
    assert sup_diff(lhs, rhs) <= 1e-11


# Q projection --------------------------------------------------------------


def test_q_of_rotation_vanishes():
    phi = random_trig_poly(np.random.default_rng(2), 4, decay=1.0, scale=0.2)
    assert sup_norm(q_project(rotation_mat(phi))) <= 1e-14


def test_q_of_diagonal():
    a = 2.0
    Q = q_matrix(np.diag([a, 1 / a]))
    assert np.allclose(Q, (a - 1 / a) / 2 * np.diag([1, -1]), atol=1e-15)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_q_projection_algebra(seed):
    rng = np.random.default_rng(seed)
    M, N = random_matfn(rng), random_matfn(rng)
    Q = q_project(M)
    assert np.array_equal(q_project(Q).coeffs, Q.coeffs)
    assert np.allclose(q_project(M + N).coeffs, (Q + q_project(N)).coeffs, atol=1e-15)
    C = conformal_part(M).coeffs
    assert np.max(np.abs(C[0, 0] - C[1, 1])) <= 1e-14
    assert np.max(np.abs(C[0, 1] + C[1, 0])) <= 1e-14
    theta = random_trig_poly(rng, 3, decay=1.0, scale=0.3)
    R = rotation_mat(theta)
    assert sup_diff(q_project(R @ M), R @ Q) <= 1e-14 * max(1.0, sup_norm(M))


# decompose ----------------------------------------------------------------


def test_decompose_rotation():
    psi = random_trig_poly(np.random.default_rng(3), 4, decay=1.0, scale=0.1).shift_mean(0.7)
    d = decompose(Cocycle.make(GOLDEN, rotation_mat(psi)))
    assert d.degree == 0
    assert sup_norm(d.phi - psi) <= 1e-13
    assert sup_norm(d.F) <= 1e-13


def test_decompose_hyperbolic_constant():
    A = np.diag([2.0, 0.5])
    d = decompose(Cocycle.make(GOLDEN, MatFn.constant(A)))
    assert d.phi.mean == 0.0
    assert np.allclose(d.F.mean_matrix(), A - np.eye(2), atol=1e-15)


def test_decompose_free_cocycle_angle():
    d = decompose(schrodinger(FREE, 1.0, GOLDEN))
    assert d.phi.mean == pytest.approx(math.atan2(1, 0.5) / (2 * math.pi), abs=1e-15)


def test_decompose_reflection_fails():
    with pytest.raises(NotNearRotation):
        decompose(Cocycle.make(GOLDEN, MatFn.constant(np.diag([1.0, -1.0]))))


@settings(max_examples=15, deadline=None)
@given(seeds, st.floats(1e-8, 1e-3))
def test_decompose_reconstitute_round_trip(seed, size):
    rng = np.random.default_rng(seed)
    phi = random_elliptic_phi(rng)
    F = random_defect(rng, phi, size)
    d0 = DecomposedCocycle(GOLDEN[0], phi, F)
    d1 = decompose(d0.reconstitute())
    # the conformal angle of R_phi + F differs from phi at first order in F;
    # the pair reconstitutes the same matrix
    assert sup_diff((rotation_mat(d1.phi) + d1.F), (rotation_mat(phi) + F)) <= 1e-12
    assert sup_norm(d1.phi - phi) <= 2 * size
    d2 = decompose(DecomposedCocycle(GOLDEN[0], d1.phi, d1.F).reconstitute())
    assert sup_norm(d2.phi - d1.phi) <= 1e-10 and sup_norm(d2.F - d1.F) <= 1e-10


def test_degree_is_recorded():
    c = Cocycle.make(GOLDEN, rotation_mat(TorusFn([0.1, 0.02]), degree=1))
    assert decompose(c).degree == 1
    est = rotation_number(c)
    assert est.degree == 1
    assert est.rho == pytest.approx(0.1, abs=1e-10)


# rotation number ----------------------------------------------------------


def test_rotation_number_constant_rotation():
    t = 1 / (2 * math.pi)
    R = MatFn.constant([[math.cos(1), -math.sin(1)], [math.sin(1), math.cos(1)]])
    est = rotation_number(Cocycle.make(GOLDEN, R))
    assert est.rho == pytest.approx(t, abs=1e-14)
    assert est.error_bound > 0


@pytest.mark.parametrize("E", [-1.5, -1.0, 0.0, 1.0, 1.9])
def test_rotation_number_free(E):
    est = rotation_number(schrodinger(FREE, E, GOLDEN))
    assert est.rho == pytest.approx(math.acos(E / 2) / (2 * math.pi), abs=1e-8)
    assert 0.0 <= est.rho < 1.0


def test_rotation_number_of_rotation_valued():
    phi = random_trig_poly(np.random.default_rng(4), 3, decay=1.0, scale=0.05)
    phi = phi.shift_mean(0.37 - phi.mean)
    est = rotation_number(Cocycle.make(GOLDEN, rotation_mat(phi)))
    assert est.rho == pytest.approx(0.37, abs=1e-6)


@pytest.mark.parametrize("E", [0.0, -1.0, 1.3])
def test_rotation_number_matches_ids(E):
    est = rotation_number(schrodinger(almost_mathieu_potential(0.1), E, GOLDEN))
    ref = rho_from_ids(sturm_ids(am_sites(0.1, G, 2048), E))
    assert est.rho == pytest.approx(ref, abs=2e-3)


def test_rotation_number_hyperbolic_is_in_range():
    est = rotation_number(schrodinger(FREE, 2.5, GOLDEN))
    assert 0.0 <= est.rho < 1.0
    assert min(est.rho, 1 - est.rho) <= 1e-12


def test_rotation_number_deterministic():
    c = schrodinger(almost_mathieu_potential(0.2), 0.3, GOLDEN)
    assert rotation_number(c) == rotation_number(c)


# Lyapunov -----------------------------------------------------------------


def test_lyapunov_rotation_is_zero():
    phi = random_trig_poly(np.random.default_rng(5), 3, decay=1.0, scale=0.1)
    assert abs(lyapunov(Cocycle.make(GOLDEN, rotation_mat(phi)))) <= 1e-10


def test_lyapunov_hyperbolic_constant():
    c = Cocycle.make(GOLDEN, MatFn.constant(np.diag([2.0, 0.5])))
    assert lyapunov(c) == pytest.approx(math.log(2), abs=1e-6)


def test_lyapunov_supercritical_almost_mathieu():
    lam = 2.5
    c = schrodinger(almost_mathieu_potential(lam), 0.0, GOLDEN)
    est = lyapunov(c)
    ref = transfer_lyapunov(lambda x: 2 * lam * math.cos(2 * math.pi * x), 0.0, G, 20000)
    assert est > 0
    assert est == pytest.approx(ref, abs=5e-2)
    assert est == pytest.approx(math.log(lam), abs=5e-2)


@pytest.mark.parametrize("lam, E", [(0.0, 0.3), (1e-3, -1.2), (0.5, 0.1), (0.0, 1.99)])
def test_lyapunov_nonnegative(lam, E):
    assert lyapunov(schrodinger(almost_mathieu_potential(lam), E, GOLDEN)) >= -1e-6


def test_lyapunov_rejects_short_orbit():
    with pytest.raises(ValueError):
        lyapunov(schrodinger(FREE, 0.0, GOLDEN), L=10)


# iterated defect ----------------------------------------------------------


def test_iterated_defect_abelian():
    phi = random_elliptic_phi(np.random.default_rng(6))
    d = DecomposedCocycle(GOLDEN[0], phi, MatFn(np.zeros((2, 2, 1))))
    it = iterated_defect(d, 89)
    assert sup_norm(it.xi) <= 1e-12


def test_iterated_defect_n1_is_F():
    rng = np.random.default_rng(7)
    phi = random_elliptic_phi(rng)
    F = random_defect(rng, phi, 1e-4)
    it = iterated_defect(DecomposedCocycle(GOLDEN[0], phi, F), 1)
    assert sup_norm(it.xi - F) <= 1e-16


def test_iterated_defect_first_order_growth():
    rng = np.random.default_rng(8)
    phi = random_elliptic_phi(rng)
    F = random_defect(rng, phi, 1e-6)
    n = expand(GOLDEN, max_terms=8).denominators[6]
    it = iterated_defect(DecomposedCocycle(GOLDEN[0], phi, F), n)
    assert sup_norm(it.xi) <= 10 * n * 1e-6
    assert it.norms.values[0] == pytest.approx(sup_norm(it.xi))


def test_iterated_defect_matches_plain_iterate():
    rng = np.random.default_rng(9)
    phi = random_elliptic_phi(rng)
    F = random_defect(rng, phi, 1e-3)
    d = DecomposedCocycle(GOLDEN[0], phi, F)
    n = 34
    it = iterated_defect(d, n)
    ref = iterate(d.reconstitute(), n) - rotation_mat(birkhoff_sum(phi, GOLDEN, n, mod_one=True))
    assert sup_diff(it.xi, ref) <= 1e-12
