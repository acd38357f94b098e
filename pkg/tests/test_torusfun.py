import json
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocycle_reduce.arithmetic import expand, golden_alpha
from cocycle_reduce.errors import BandwidthOverflow, DegenerateNorm, NonFinite, SingularMatrix, SmallDivisorWarning
from cocycle_reduce.torusfun import (
    MatFn,
    NormLedger,
    TorusFn,
    birkhoff_sum,
    cr_norm,
    cr_norm_bounds,
    derivative,
    from_samples,
    interpolation_ratio,
    mat_inverse,
    mat_product,
    mat_translate,
    numerics,
    random_trig_poly,
    rest,
    rotation_mat,
    sup_norm,
    translate,
    truncate,
)

from instances import near_rotation, random_elliptic_phi
from oracles import birkhoff_direct, dense_sup, derivative_coeffs, eval_coeffs

GOLDEN = golden_alpha()
G = float(GOLDEN[0])

seeds = st.integers(0, 2**32 - 1)


def mat_sup_diff(A, B, M=512):
    x = np.arange(M) / M
    D = A(x) - B(x)
    return float(np.sqrt((D**2).sum(axis=(1, 2))).max())


# from_samples -------------------------------------------------------------


def test_from_samples_constant():
    f = from_samples(np.ones(16))
    assert f.coeffs[0] == pytest.approx(1.0, abs=1e-15)
    assert np.max(np.abs(f.coeffs[1:])) <= 1e-15


def test_from_samples_pure_mode():
    x = np.arange(16) / 16
    f = from_samples(np.cos(2 * np.pi * x))
    assert f.coeffs[1] == pytest.approx(0.5, abs=1e-15)
    others = np.delete(f.coeffs, 1)
    assert np.max(np.abs(others)) <= 1e-15


def test_from_samples_round_trip():
    rng = np.random.default_rng(7)
    s = rng.standard_normal(64)
    f = from_samples(s)
    assert f.bandwidth == 32
    assert np.max(np.abs(f.evaluate(np.arange(64) / 64) - s)) <= 1e-13


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_from_samples_rejects_nonfinite(bad):
    s = np.zeros(16)
    s[3] = bad
    with pytest.raises(NonFinite):
        from_samples(s)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 40))
def test_grid_samples_match_direct_evaluation(seed, N):
    f = random_trig_poly(np.random.default_rng(seed), N)
    M = f.default_grid()
    x = np.arange(M) / M
    scale = np.max(np.abs(f.coeffs)) * (2 * N + 1)
    assert np.max(np.abs(f.samples(M) - f.evaluate(x))) <= 1e-13 * scale
    assert np.max(np.abs(f.evaluate(x) - eval_coeffs(f.coeffs, x))) <= 1e-13 * scale


# derivative ---------------------------------------------------------------


def test_derivative_of_sine():
    s = TorusFn([0.0, -0.5j])  # sin(2 pi x)
    x = np.linspace(0, 1, 37)
    assert np.allclose(derivative(s).evaluate(x), 2 * np.pi * np.cos(2 * np.pi * x), atol=1e-13)
    assert derivative(s, 0) is s


@pytest.mark.parametrize("seed", range(5))
def test_second_derivative_finite_differences(seed):
    f = random_trig_poly(np.random.default_rng(seed), 6)
    x = np.linspace(0, 1, 100, endpoint=False)
    h = 1e-3
    v = {k: f.evaluate(x + k * h) for k in (-2, -1, 0, 1, 2)}
    fd = (-v[2] + 16 * v[1] - 30 * v[0] + 16 * v[-1] - v[-2]) / (12 * h**2)
    exact = derivative(f, 2).evaluate(x)
    assert np.max(np.abs(fd - exact)) <= 1e-6 * np.max(np.abs(exact))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(0, 30), st.floats(0, 40))
def test_derivative_commutes_with_truncate(seed, N, a):
    f = random_trig_poly(np.random.default_rng(seed), N)
    assert np.array_equal(derivative(truncate(f, a)).coeffs, truncate(derivative(f), a).coeffs)


# norms --------------------------------------------------------------------


def test_cr_norm_sine():
    s = TorusFn([0.0, -0.5j])
    assert cr_norm(s, 2) == pytest.approx(1 + 2 * np.pi + 4 * np.pi**2, rel=1e-9)


def test_cr_norm_zero():
    for k in range(4):
        assert cr_norm(TorusFn.zero(), k) == 0.0


@pytest.mark.parametrize("seed", range(4))
def test_cr_norm_dense_oracle(seed):
    f = random_trig_poly(np.random.default_rng(seed), 12, decay=1.0)
    ref = sum(dense_sup(derivative_coeffs(f.coeffs, h)) for h in range(4))
    assert cr_norm(f, 3) == pytest.approx(ref, rel=1e-8)
    lo, hi = cr_norm_bounds(f, 3)
    assert lo <= ref * (1 + 1e-12) and ref <= hi * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 20))
def test_cr_norm_monotone_in_order(seed, N):
    f = random_trig_poly(np.random.default_rng(seed), N)
    vals = [cr_norm(f, k) for k in range(5)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    led = NormLedger.of(f, orders=(0, 2, 4))
    assert led.values[0] <= led.values[2] <= led.values[4]


def test_matrix_sup_norm_is_pointwise_frobenius():
    A = rotation_mat(TorusFn([0.1, 0.05]))
    assert sup_norm(A) == pytest.approx(math.sqrt(2), rel=1e-12)


# truncate / rest -----------------------------------------------------------


def test_truncate_mode_split():
    f = TorusFn([0, 0.5, 0.5])
    assert np.array_equal(truncate(f, 1).coeffs, [0, 0.5, 0])
    assert np.array_equal(rest(f, 1).coeffs, [0, 0, 0.5])


def test_rest_beyond_band_is_zero():
    f = random_trig_poly(np.random.default_rng(3), 8)
    assert not np.any(rest(f, 8).coeffs)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(0, 40), st.floats(0, 50))
def test_truncate_plus_rest_is_exact(seed, N, a):
    f = random_trig_poly(np.random.default_rng(seed), N)
    assert np.array_equal((truncate(f, a) + rest(f, a)).coeffs, f.coeffs)


def test_rest_decay_bound():
    # |D^t R_a f|_0 <= C a^-h ||f||_{t+h+2}, measured constant
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        f = random_trig_poly(rng, 24, decay=2.0)
        for a in (2, 4, 8, 16):
            for t, h in ((0, 1), (1, 1), (1, 2)):
                lhs = sup_norm(derivative(rest(f, a), t))
                rhs = a ** (-h) * cr_norm(f, t + h + 2)
                worst = max(worst, lhs / rhs)
    assert worst <= 2.0


# Birkhoff sums ------------------------------------------------------------


def test_birkhoff_constant_and_identity():
    assert birkhoff_sum(TorusFn.constant(0.3), GOLDEN, 7).coeffs[0] == pytest.approx(2.1)
    f = random_trig_poly(np.random.default_rng(1), 5)
    assert np.allclose(birkhoff_sum(f, GOLDEN, 1).coeffs, f.coeffs, atol=1e-15)


def test_birkhoff_cosine_direct():
    q8 = expand(GOLDEN, max_terms=10).denominators[8]
    assert q8 == 34
    f = TorusFn([0.0, 0.5])
    x = np.arange(64) / 64
    S = birkhoff_sum(f, GOLDEN, q8)
    assert np.max(np.abs(S.evaluate(x) - birkhoff_direct(f.coeffs, G, q8, x))) <= 1e-11


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 60), st.integers(1, 60))
def test_birkhoff_telescoping(seed, m, n):
    f = random_trig_poly(np.random.default_rng(seed), 8, decay=1.0)
    lhs = birkhoff_sum(f, GOLDEN, m + n)
    rhs = translate(birkhoff_sum(f, GOLDEN, m), GOLDEN[0] * n) + birkhoff_sum(f, GOLDEN, n)
    assert sup_norm(lhs - rhs) <= 1e-11


def test_birkhoff_mod_one_mean():
    f = TorusFn([Fraction(1, 3)])
    assert birkhoff_sum(f, GOLDEN, 10, mod_one=True).mean == pytest.approx(1 / 3, abs=1e-15)


def test_birkhoff_small_divisor_warns():
    f = TorusFn([0.0, 0.0, 1.0])
    with pytest.warns(SmallDivisorWarning):
        S = birkhoff_sum(f, Fraction(1, 2), 5)
    assert S.coeffs[2] == pytest.approx(5.0)


def test_birkhoff_no_warning_for_irrational():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        birkhoff_sum(random_trig_poly(np.random.default_rng(0), 20), GOLDEN, 10**6)


# rotations and matrix functions ---------------------------------------------


def test_rotation_examples():
    assert mat_sup_diff(rotation_mat(TorusFn.zero()), MatFn.identity()) <= 1e-15
    J = MatFn.constant([[0, -1], [1, 0]])
    assert mat_sup_diff(rotation_mat(TorusFn.constant(0.25)), J) <= 1e-15


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_rotation_determinant(seed):
    phi = random_trig_poly(np.random.default_rng(seed), 6, decay=1.0, scale=0.3)
    R = rotation_mat(phi)
    M = 8 * R.default_grid()
    x = np.arange(M) / M
    s = R(x)
    det = s[:, 0, 0] * s[:, 1, 1] - s[:, 0, 1] * s[:, 1, 0]
    assert np.max(np.abs(det - 1)) <= 1e-13


def test_rotation_bandwidth_overflow():
    with numerics(max_modes=64):
        with pytest.raises(BandwidthOverflow):
            rotation_mat(TorusFn([0.0, 40.0]))


def test_rotation_derivative_bound():
    # |D R_phi|_0 <= C |phi|_1 with measured C <= 10
    rng = np.random.default_rng(5)
    for _ in range(10):
        phi = random_trig_poly(rng, 5, decay=1.0)
        phi = phi.scale(1.0 / cr_norm(phi, 1))
        assert sup_norm(derivative(rotation_mat(phi))) <= 10 * cr_norm(phi, 1)


@pytest.mark.parametrize("seed", range(5))
def test_inverse_of_near_rotation(seed):
    rng = np.random.default_rng(seed)
    A = near_rotation(rng, random_elliptic_phi(rng), 1e-2)
    P = mat_product(A, mat_inverse(A))
    assert mat_sup_diff(P, MatFn.identity()) <= 1e-12
    P2 = mat_product(A.with_sl2(False), mat_inverse(A.with_sl2(False)))
    assert mat_sup_diff(P2, MatFn.identity()) <= 1e-12


def test_singular_matrix():
    with pytest.raises(SingularMatrix):
        mat_inverse(MatFn.constant([[1.0, 2.0], [2.0, 4.0]]))


def test_translate_identities():
    rng = np.random.default_rng(2)
    phi = random_trig_poly(rng, 4, decay=1.0, scale=0.2)
    A = rotation_mat(phi)
    assert np.array_equal(mat_translate(A, 0).coeffs, A.coeffs)
    beta = GOLDEN[0] * 13
    assert mat_sup_diff(mat_translate(A, beta), rotation_mat(translate(phi, beta))) <= 1e-13


def test_translate_diff_matches_difference():
    f = random_trig_poly(np.random.default_rng(4), 10)
    beta = Fraction(3, 7)
    assert sup_norm(f.translate_diff(beta) - (f.translate(beta) - f)) <= 1e-13


# interpolation ------------------------------------------------------------


def test_interpolation_sine():
    assert interpolation_ratio(TorusFn([0.0, -0.5j]), 0, 1, 2) <= 2.0


def test_interpolation_constant_is_degenerate():
    with pytest.raises(DegenerateNorm):
        interpolation_ratio(TorusFn.constant(3.0), 0, 1, 2)


def test_interpolation_regression_baseline():
    # maximum over 1000 seeded degree-32 polynomials, measured once and pinned
    rng = np.random.default_rng(2024)
    worst = max(interpolation_ratio(random_trig_poly(rng, 32, decay=1.0), 0, 1, 2) for _ in range(1000))
    assert worst == pytest.approx(INTERPOLATION_BASELINE, rel=1e-9)
    assert worst <= 1.0


INTERPOLATION_BASELINE = 0.9483240566708838  # seed 2024, 1000 draws, N = 32, decay 1


# JSON ---------------------------------------------------------------------


def test_json_round_trip():
    f = random_trig_poly(np.random.default_rng(9), 7)
    g = TorusFn.from_json(json.loads(json.dumps(f.to_json())))
    assert np.array_equal(f.coeffs, g.coeffs)
    A = near_rotation(np.random.default_rng(9), random_elliptic_phi(np.random.default_rng(8)), 1e-3)
    B = MatFn.from_json(json.loads(json.dumps(A.to_json())))
    assert np.array_equal(A.coeffs, B.coeffs) and B.sl2


@pytest.mark.parametrize(
    "bad",
    [
        {"bandwidth": 1, "coefficients": [[1.0, 0.5], [0.0, 1.0]]},  # complex mean: not Hermitian-completable
        {"bandwidth": 2, "coefficients": [[1.0, 0.0]]},
        {"coefficients": [[1.0, 0.0]]},
        {"bandwidth": 0, "coefficients": [[1.0, 0.0, 3.0]]},
    ],
)
def test_json_rejects_bad_records(bad):
    with pytest.raises(ValueError):
        TorusFn.from_json(bad)


def test_immutable():
    f = TorusFn([1.0, 2.0])
    with pytest.raises(AttributeError):
        f.coeffs = None
    with pytest.raises(ValueError):
        f.coeffs[0] = 3.0
