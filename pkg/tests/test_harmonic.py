import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfgaps import harmonic
from qfgaps.arith import euler_phi, factorize, radical
from qfgaps.harmonic import (
    ResourceError,
    coprime_harmonic_exact,
    coprime_harmonic_main_term,
    corollary_bounds,
    harmonic_decomposition,
    harmonic_exact,
    moebius_expansion,
    verify_error_bound,
)


def _brute(N, x):
    return sum((Fraction(1, k) for k in range(1, math.floor(x) + 1) if math.gcd(k, N) == 1), Fraction(0))


def test_harmonic_small_values():
    assert harmonic_exact(1) == 1
    assert harmonic_exact(10) == Fraction(7381, 2520)
    with pytest.raises(ValueError):
        harmonic_exact(0)


def test_exact_cap():
    with pytest.raises(ResourceError):
        harmonic_exact(2000, cap=1000)
    with pytest.raises(ResourceError):
        coprime_harmonic_exact(6, 5000, cap=1000)


@given(st.integers(min_value=1, max_value=300), st.integers(min_value=1, max_value=400))
@settings(max_examples=200, deadline=None)
def test_coprime_sum_matches_fraction_oracle(N, x):
    assert coprime_harmonic_exact(N, x) == _brute(N, x)


def test_moebius_identity_dense_grid():
    for N in range(1, 61):
        for x in range(1, 301, 7):
            assert moebius_expansion(N, x) == coprime_harmonic_exact(N, x)


@given(st.integers(min_value=1, max_value=500), st.integers(min_value=1, max_value=5000))
@settings(max_examples=150, deadline=None)
def test_moebius_identity_sampled(N, x):
    assert moebius_expansion(N, x) == coprime_harmonic_exact(N, x)


def test_noninteger_x_uses_floor():
    assert coprime_harmonic_exact(6, Fraction(23, 2)) == coprime_harmonic_exact(6, 11)
    assert coprime_harmonic_exact(6, mpmath.mpf("11.99")) == coprime_harmonic_exact(6, 11)


def test_bound_fails_outside_radical_multiples():
    # 1 + 1/3 against (1/2)(log 3 + gamma + log 2): |E| ~ 0.149 > 3/72
    rep = verify_error_bound(2, 3)
    assert rep.status == "fail"
    assert rep.notes
    assert verify_error_bound(6, Fraction(23, 2)).status == "fail"


@given(st.integers(min_value=2, max_value=400), st.integers(min_value=1, max_value=30))
@settings(max_examples=150, deadline=None)
def test_bound_holds_on_radical_multiples(N, m):
    x = m * radical(N)
    if x < 2:
        x = 2 * radical(N)
    rep = verify_error_bound(N, x)
    assert rep.status == "pass"
    assert not rep.notes


def test_worked_small_report():
    rep = verify_error_bound(4, 10)
    assert rep.exact_sum == Fraction(563, 315)
    assert rep.status == "pass"
    d = rep.to_dict()
    assert d["exact_sum"] == "563/315"
    assert d["status"] == "pass"


def test_main_term_independent_formula():
    for N in (2, 6, 30, 97, 360, 1001):
        x = 3 * N + 1
        with mpmath.workdps(50):
            ps = factorize(N).primes
            ref = mpmath.mpf(euler_phi(N)) / N * (
                mpmath.log(x) + mpmath.euler + sum(mpmath.log(p) / (p - 1) for p in ps)
            )
            got = coprime_harmonic_main_term(N, x, 40)
            assert abs(got.value - ref) < mpmath.mpf(10) ** -35


def test_error_term_tends_to_zero_like_bound():
    for N in (6, 30, 210):
        errs = [abs(float(verify_error_bound(N, x).error_term.value)) for x in (N, 10 * N, 100 * N)]
        assert errs[2] < errs[0]


def test_sandwich_on_diagonal():
    rep = verify_error_bound(30, 30)
    assert rep.sandwich == "pass"
    assert verify_error_bound(30, 60).sandwich is None


def test_domain_errors():
    with pytest.raises(ValueError):
        verify_error_bound(1, 10)
    with pytest.raises(ValueError):
        corollary_bounds(4)


@pytest.mark.parametrize("n", [1, 2, 3, 10, 100, 1000])
def test_harmonic_decomposition_within_bounds(n):
    dec = harmonic_decomposition(n)
    assert dec.within_bounds
    assert dec.h_exact == harmonic_exact(n)


def test_small_scans_pass():
    assert harmonic.theorem_scan(150).passed
    res = harmonic.corollary_scan(3000)
    assert res.passed and res.checked == 2996
    assert harmonic.lemma_scan(12000, exact_up_to=2000).passed


def test_corollary_scan_float_path_agrees_with_exact():
    # the float scan and the exact report must agree on every N it covers
    for N in range(5, 120):
        assert verify_error_bound(N, N).sandwich == "pass"
    assert harmonic.corollary_scan(119).passed
