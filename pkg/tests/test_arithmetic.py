from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocycle_reduce.arithmetic import (
    ConvergentTable,
    Subsequence,
    check_resonances,
    dist_to_integer,
    exact_alpha,
    expand,
    golden_alpha,
    liouville_alpha,
    resonance_threshold,
    select_subsequence,
)
from cocycle_reduce.errors import RationalInput

from oracles import euclid_denominators, golden_mp, mp_to_fraction, pi_minus_3_mp

FIB = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]


def pi_minus_3():
    return (mp_to_fraction(pi_minus_3_mp()), Fraction(1, 2**390))


# expand ------------------------------------------------------------------


def test_golden_denominators_are_fibonacci():
    t = expand(golden_alpha(), max_terms=10)
    assert list(t.denominators) == FIB[:10]
    assert all(a == 1 for a in t.partial_quotients)
    assert list(t.denominators) == euclid_denominators(golden_mp(), 10)


def test_pi_minus_3_denominators():
    t = expand(pi_minus_3(), max_terms=5)
    assert list(t.denominators) == [1, 7, 106, 113, 33102]
    assert list(t.denominators) == euclid_denominators(pi_minus_3_mp(), 5)


@pytest.mark.parametrize("alpha", [0.5, Fraction(1, 2), 0.25, 1.0 / 3.0, "0.5"])
def test_rational_input(alpha):
    with pytest.raises(RationalInput):
        expand(alpha)


def test_float_precision_stops_expansion():
    t = expand(0.6180339887498949, max_terms=80)
    assert t.precision_exhausted
    assert t.stop_reason == "precision"
    # a double carries ~ 2^-53: the certified q stay below ~ 2^27
    assert t.denominators[-1] < 2**28
    assert list(t.denominators) == euclid_denominators(golden_mp(), t.count)


def test_q_cap_stops():
    t = expand(golden_alpha(), max_terms=50, q_cap=1000)
    assert t.stop_reason == "q_cap"
    assert t.denominators[-1] <= 1000 < t.denominators[-1] * 2


def test_mpf_input_matches_fraction_input():
    with mpmath.workprec(300):
        g = (mpmath.sqrt(5) - 1) / 2
        t1 = expand(g, max_terms=40)
    t2 = expand(golden_alpha(), max_terms=40)
    assert t1.denominators == t2.denominators


def test_liouville_denominators():
    t = expand(liouville_alpha(4), max_terms=10)
    assert t.denominators[:8] == (1, 9, 100, 9909, 10009, 109999, 1000000, 999999999999109999)
    assert t.stop_reason in ("max_terms", "rational")


def test_exact_alpha_float_radius():
    v, r = exact_alpha(0.1)
    assert v == Fraction(0.1)
    assert 0 < r <= Fraction(1, 2**56)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=3, max_size=25))
def test_table_invariants_random_partial_quotients(pq):
    # alpha = [0; a_1, a_2, ...] exactly, then a tail to keep it irrational-looking
    x = Fraction(0)
    for a in reversed(pq + [1, 1, 1]):
        x = 1 / (a + x)
    t = expand(x, max_terms=len(pq))
    assert t.check_recursion()
    assert list(t.partial_quotients) == pq[: t.count - 1]
    q = t.denominators
    assert all(q[i] < q[i + 1] for i in range(1, len(q) - 1))
    for k in range(t.count - 1):
        assert t.sandwich_holds(k)


def test_best_approximation_and_sandwich_golden():
    t = expand(golden_alpha(), max_terms=20)
    for n in range(1, t.count):
        assert t.best_approximation_holds(n)
    for k in range(t.count - 1):
        assert t.sandwich_holds(k)


# dist_to_integer ---------------------------------------------------------


@pytest.mark.parametrize("x, d", [(0.0, 0.0), (2.75, 0.25), (0.5, 0.5), (-0.3, 0.3), (Fraction(7, 3), Fraction(1, 3))])
def test_dist_to_integer_examples(x, d):
    assert dist_to_integer(x) == pytest.approx(d, abs=1e-15)


def test_dist_to_integer_rejects_nonfinite():
    with pytest.raises(ValueError):
        dist_to_integer(float("nan"))


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_dist_to_integer_range(x):
    d = dist_to_integer(x)
    assert 0.0 <= d <= 0.5


# select_subsequence ------------------------------------------------------


def test_golden_subsequence():
    t = expand(golden_alpha(), max_terms=12)
    sub = select_subsequence(t)
    assert list(sub.indices) == [0, 1, 4, 10]
    assert list(sub.q_values) == [1, 1, 5, 89]
    assert sub.s_values[-1] == 1 * 1 * 5 * 89
    assert sub.growth_bounds_hold(t)


def test_short_table_exhausts_immediately():
    sub = select_subsequence([1, 10])
    assert list(sub.indices) == [0]
    assert sub.exhausted


def test_smallest_admissible_index_is_chosen():
    # after n_0 = 0 the window is [q_1^2, q_1^4) = [4, 16): indices 2..5 qualify
    q = [1, 2, 4, 5, 6, 7, 100, 10**9]
    sub = select_subsequence(q)
    assert sub.indices[:2] == (0, 2)
    # window after n = 2 is [25, 625): q_6 = 100
    assert sub.indices[2] == 6
    assert select_subsequence(q) == sub


def test_else_branch_takes_largest_below_square():
    # q_1 = 3, window [9, 81) is empty; largest q_k <= 9 is q_2 = 8
    q = [1, 3, 8, 100, 10**6]
    sub = select_subsequence(q)
    assert sub.indices[:2] == (0, 2)
    assert sub.branches[0] == "max"


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 2000), min_size=4, max_size=30))
def test_subsequence_growth_bounds_and_determinism(pq):
    q = [1, pq[0]]
    for a in pq[1:]:
        q.append(a * q[-1] + q[-2])
    sub = select_subsequence(q)
    assert sub.indices[0] == 0
    assert all(b > a for a, b in zip(sub.indices, sub.indices[1:]))
    for h in range(len(sub) - 1):
        n, n1 = sub.indices[h], sub.indices[h + 1]
        assert q[n1] <= q[n + 1] ** 4
        assert sub.s_values[h] ** 6 <= q[n1] ** 12
    assert select_subsequence(q) == sub


# resonances --------------------------------------------------------------


def test_exact_resonance_fails():
    sub = Subsequence((0, 1), (1, 2), (1, 2))
    reps = check_resonances(Fraction(1, 4), sub, 0.1)
    assert reps[1].value == 0.0
    assert not reps[1].passed


def test_golden_rho_passes_early_steps():
    t = expand(golden_alpha(), max_terms=30)
    sub = select_subsequence(t)
    reps = check_resonances(golden_alpha()[0], sub, 0.1)
    assert all(r.passed for r in reps if r.h <= 3)
    for r in reps:
        assert 0.0 <= r.value <= 0.5
        assert r.passed == (r.value >= r.threshold)


def test_zero_rho_fails_everywhere():
    sub = select_subsequence(expand(golden_alpha(), max_terms=20))
    assert not any(r.passed for r in check_resonances(0.0, sub, 0.1))


def test_threshold_at_n_zero():
    assert resonance_threshold(0.1, 0) == 0.1
    assert resonance_threshold(0.1, 4) == pytest.approx(0.1 / 16)


def test_expansion_is_deterministic():
    t = expand(golden_alpha(), max_terms=5)
    assert isinstance(t, ConvergentTable)
    assert t == expand(golden_alpha(), max_terms=5)
