"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both backends are imported directly, so the QFGAPS_PURE_PYTHON switch is
irrelevant here.  Outputs are checked for agreement before timing.
"""

import argparse
import time

import numpy as np

from qfgaps import _fallback
from qfgaps.characters import CharacterGroup
from qfgaps.qform import DiscriminantSet, reduced_forms

try:
    from qfgaps import _kernels
except ImportError:
    _kernels = None


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def sieve_case(impl, members, X):
    forms = [f for D in DiscriminantSet(members) for f in reduced_forms(D)]

    def run():
        marks = np.zeros(X, dtype=np.uint8)
        for a, b, c in forms:
            impl.mark_form_segment(a, b, c, 1, X, marks)
        return marks

    return run


def pv_case(impl, q):
    g = CharacterGroup(q)
    ph = np.ascontiguousarray(g.phases(g.exponent_tuples()))
    cos_t, sin_t = g.root_tables()

    def run():
        val = np.zeros(len(ph))
        arg = np.zeros(len(ph), dtype=np.int64)
        impl.partial_sum_maxima(ph, cos_t, sin_t, val, arg)
        return val

    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels are not built; only the fallback can run")
    cases = [
        ("sieve {-4}, X = 1e6", lambda m: sieve_case(m, (-4,), 10**6)),
        ("sieve {-4, -20}, X = 1e6", lambda m: sieve_case(m, (-4, -20), 10**6)),
        ("sieve {-84}, X = 1e6", lambda m: sieve_case(m, (-84,), 10**6)),
        ("char sums q = 1009", lambda m: pv_case(m, 1009)),
        ("char sums q = 1999", lambda m: pv_case(m, 1999)),
    ]
    print(f"{'case':28s} {'cython [s]':>11s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, make in cases:
        t_py, out_py = _best(make(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:28s} {'-':>11s} {t_py:10.4f} {'-':>8s}")
            continue
        t_c, out_c = _best(make(_kernels), args.repeat)
        if out_c.dtype == np.uint8:
            assert np.array_equal(out_c, out_py), name
        else:
            assert np.allclose(out_c, out_py, rtol=0, atol=1e-8), name
        print(f"{name:28s} {t_c:11.4f} {t_py:10.4f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
