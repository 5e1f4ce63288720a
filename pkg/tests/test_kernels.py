import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfgaps import _fallback, kernels
from qfgaps.characters import CharacterGroup
from qfgaps.qform import reduced_forms

compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")


def _mark(impl, form, lo, hi):
    out = np.zeros(hi - lo + 1, dtype=np.uint8)
    impl.mark_form_segment(*form, lo, hi, out)
    return out


def test_fallback_marks_form_values():
    out = _mark(_fallback, (1, 0, 1), 1, 50)
    assert (np.flatnonzero(out) + 1).tolist() == [1, 2, 4, 5, 8, 9, 10, 13, 16, 17, 18, 20, 25, 26, 29, 32, 34, 36, 37, 40, 41, 45, 49, 50]


def test_fallback_rejects_indefinite():
    with pytest.raises(ValueError):
        _mark(_fallback, (1, 0, -1), 1, 10)


@compiled
@given(
    st.sampled_from([-3, -4, -7, -8, -12, -15, -20, -23, -47, -84, -100]),
    st.integers(min_value=1, max_value=10**6),
    st.integers(min_value=0, max_value=5000),
)
@settings(max_examples=120, deadline=None)
def test_mark_backends_agree(D, lo, width):
    from qfgaps import _kernels

    for form in reduced_forms(D):
        assert np.array_equal(_mark(_kernels, form, lo, lo + width), _mark(_fallback, form, lo, lo + width))


@compiled
@pytest.mark.parametrize("q", [3, 4, 5, 8, 24, 97, 360, 1001])
def test_partial_sum_backends_agree(q):
    from qfgaps import _kernels

    g = CharacterGroup(q)
    ph = np.ascontiguousarray(g.phases(g.exponent_tuples()))
    cos_t, sin_t = g.root_tables()
    results = []
    for impl in (_kernels, _fallback):
        val = np.zeros(len(ph))
        arg = np.zeros(len(ph), dtype=np.int64)
        impl.partial_sum_maxima(ph, cos_t, sin_t, val, arg)
        results.append((val, arg))
    assert np.allclose(results[0][0], results[1][0], rtol=0, atol=q * 2.0**-45)
    # principal partial sums first reach phi(q) at the largest unit, q - 1
    assert results[0][1][0] == results[1][1][0] == q - 1
    assert results[0][0][0] == results[1][0][0] == g.phi
    assert np.all(results[0][0] >= 0)


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
