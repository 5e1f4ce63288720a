import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfgaps.arith import kronecker
from qfgaps.harmonic import ResourceError
from qfgaps.qform import (
    DiscriminantSet,
    QuadraticForm,
    Witness,
    check_witness,
    class_number,
    exclusion_witness,
    is_properly_represented_congruence,
    is_represented,
    is_represented_congruence,
    iter_sieve_segments,
    reduced_forms,
    sieve_values,
)


def _brute_form_values(form, n_max):
    a, b, c = form
    out = set()
    bound = math.isqrt(4 * n_max) + 2
    for x in range(-bound, bound + 1):
        for y in range(-bound, bound + 1):
            v = a * x * x + b * x * y + c * y * y
            if 1 <= v <= n_max:
                out.add(v)
    return out


def _two_squares(n_max):
    out = set()
    for a in range(math.isqrt(n_max) + 1):
        for b in range(a, math.isqrt(n_max - a * a) + 1):
            if a or b:
                out.add(a * a + b * b)
    return out


@pytest.mark.parametrize(
    "D,h",
    [(-3, 1), (-4, 1), (-7, 1), (-8, 1), (-11, 1), (-15, 2), (-20, 2), (-23, 3), (-47, 5), (-56, 4), (-71, 7), (-84, 4)],
)
def test_class_numbers(D, h):
    assert class_number(D) == h


def _class_number_formula(D):
    # fundamental D < -4: h = -(1/|D|) sum_{a=1}^{|D|} a (D/a)
    return -sum(a * kronecker(D, a) for a in range(1, -D)) // -D


@pytest.mark.parametrize("D", [-7, -8, -11, -15, -19, -20, -23, -24, -31, -35, -39, -40, -43, -47, -51, -52, -55, -56, -59, -67, -68, -71, -79, -83, -84, -87, -88, -91, -95])
def test_class_number_formula(D):
    assert class_number(D) == _class_number_formula(D)


def test_reduced_forms_include_imprimitive():
    assert reduced_forms(-4) == (QuadraticForm(1, 0, 1),)
    assert set(reduced_forms(-12)) == {QuadraticForm(1, 0, 3), QuadraticForm(2, 2, 2)}
    assert class_number(-12) == 1
    for f in reduced_forms(-84):
        assert f.discriminant == -84
        assert abs(f.b) <= f.a <= f.c
        if abs(f.b) == f.a or f.a == f.c:
            assert f.b >= 0
    with pytest.raises(ValueError):
        reduced_forms(-5)
    with pytest.raises(ValueError):
        reduced_forms(8)


def test_representation_examples():
    assert is_represented(5, -4)
    assert not is_represented(3, -4)
    assert not is_represented(21, -4)
    assert is_represented(25, -4)
    assert is_represented(7, -3)
    assert not is_represented(2, -3)
    with pytest.raises(ValueError):
        is_represented(0, -4)
    with pytest.raises(ResourceError):
        is_represented(10**9, -4, cap=10**6)


@pytest.mark.parametrize("D", [-3, -4, -7, -8, -15, -20, -23])
def test_represented_matches_brute_force(D):
    n_max = 600
    values = set()
    for f in reduced_forms(D):
        values |= _brute_form_values(f, n_max)
    assert {n for n in range(1, n_max + 1) if is_represented(n, D)} == values


@pytest.mark.parametrize("D", [-3, -4, -7, -8, -11, -20, -23, -56])
def test_represented_matches_congruence_oracle(D):
    for n in range(1, 1500):
        assert is_represented(n, D) == is_represented_congruence(n, D), n


def test_proper_representation_congruence():
    assert is_properly_represented_congruence(5, -4)
    assert not is_properly_represented_congruence(9, -4)
    assert is_represented_congruence(9, -4)


def test_sieve_two_squares():
    assert set(sieve_values(DiscriminantSet.of(-4), 10**4).tolist()) == _two_squares(10**4)


@pytest.mark.parametrize("members", [(-3,), (-4, -8), (-4, -20), (-3, -4, -7)])
def test_sieve_union_matches_pointwise(members):
    ds = DiscriminantSet(members)
    X = 3000
    expected = [n for n in range(1, X + 1) if any(is_represented(n, D) for D in members)]
    assert sieve_values(ds, X).tolist() == expected


@given(st.integers(min_value=1, max_value=5000), st.integers(min_value=7, max_value=3000))
@settings(max_examples=40, deadline=None)
def test_segmentation_does_not_change_output(X, seg):
    ds = DiscriminantSet.of(-4, -7)
    whole = sieve_values(ds, X)
    parts = np.concatenate(list(iter_sieve_segments(ds, X, segment=seg)))
    assert np.array_equal(whole, parts)
    assert np.all(np.diff(parts) > 0)


def test_sieve_limits():
    with pytest.raises(NotImplementedError):
        sieve_values(DiscriminantSet.of(5), 100)
    with pytest.raises(ResourceError):
        sieve_values(DiscriminantSet.of(-4), 10**6, cap=10**5)


@pytest.mark.parametrize(
    "members",
    [(), (-4, -4), (-5,), (0,), (4,), (-3, -4, 12)],
)
def test_invalid_discriminant_sets(members):
    with pytest.raises(ValueError):
        DiscriminantSet(members)


def test_discriminant_set_d():
    assert DiscriminantSet.of(-4, -20).d == 20
    assert DiscriminantSet.of(-3, -4).d == 12
    assert DiscriminantSet.of(-3, -4).all_negative
    with pytest.raises(ValueError):
        DiscriminantSet(tuple(range(-4, -4 * 30, -4)))


def test_exclusion_witness_examples():
    ds = DiscriminantSet.of(-4)
    assert exclusion_witness(3, ds, 10) == {-4: Witness(3, 1)}
    assert exclusion_witness(9, ds, 10) is None
    assert exclusion_witness(2 * 27, ds, 10) == {-4: Witness(3, 3)}
    assert check_witness(21, -4, Witness(3, 1)) is None
    assert "not prime" in check_witness(21, -4, Witness(21, 1))
    assert "not -1" in check_witness(10, -4, Witness(5, 1))
    assert "not odd" in check_witness(9, -4, Witness(3, 2))
    assert "claims" in check_witness(27, -4, Witness(3, 1))


@given(st.integers(min_value=1, max_value=20000))
@settings(max_examples=300, deadline=None)
def test_witness_implies_not_represented(n):
    ds = DiscriminantSet.of(-4, -7, -20)
    w = exclusion_witness(n, ds, n)
    if w is not None:
        for D, wit in w.items():
            assert check_witness(n, D, wit) is None
            assert not is_represented(n, D)
