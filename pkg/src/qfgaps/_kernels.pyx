# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Semantics match qfgaps._fallback exactly."""

from libc.math cimport sqrt


cdef inline long long _isqrt(long long n) nogil:
    cdef long long s
    if n <= 0:
        return 0
    s = <long long>sqrt(<double>n)
    while s * s > n:
        s -= 1
    while (s + 1) * (s + 1) <= n:
        s += 1
    return s


cdef inline long long _floordiv(long long a, long long b) nogil:
    # b > 0
    cdef long long q = a / b
    if (a % b != 0) and (a < 0):
        q -= 1
    return q


cdef inline long long _ceildiv(long long a, long long b) nogil:
    return -_floordiv(-a, b)


cdef void _mark_range(long long a, long long b, long long c, long long y,
                      long long t0, long long t1, long long lo, long long hi,
                      unsigned char[::1] out) nogil:
    # all x with t = 2ax + by in [t0, t1]
    cdef long long x0 = _ceildiv(t0 - b * y, 2 * a)
    cdef long long x1 = _floordiv(t1 - b * y, 2 * a)
    cdef long long x, v
    for x in range(x0, x1 + 1):
        v = a * x * x + b * x * y + c * y * y
        if lo <= v <= hi:
            out[v - lo] = 1


def mark_form_segment(long long a, long long b, long long c,
                      long long lo, long long hi, unsigned char[::1] out):
    """Set out[v - lo] = 1 for every value lo <= v <= hi of ax^2 + bxy + cy^2."""
    cdef long long D = b * b - 4 * a * c
    cdef long long y, r_hi, r_lo, s_hi, s_lo
    if D >= 0 or a <= 0:
        raise ValueError("positive-definite form required")
    with nogil:
        y = 0
        while True:
            # 4a Q = t^2 - D y^2 with t = 2ax + by
            r_hi = 4 * a * hi + D * y * y
            if r_hi < 0:
                break
            s_hi = _isqrt(r_hi)
            r_lo = 4 * a * lo + D * y * y
            if r_lo <= 0:
                _mark_range(a, b, c, y, -s_hi, s_hi, lo, hi, out)
            else:
                s_lo = _isqrt(r_lo)
                if s_lo * s_lo < r_lo:
                    s_lo += 1
                if s_lo <= s_hi:
                    _mark_range(a, b, c, y, -s_hi, -s_lo, lo, hi, out)
                    _mark_range(a, b, c, y, s_lo, s_hi, lo, hi, out)
            y += 1


def partial_sum_maxima(int[:, ::1] phases, double[::1] cos_t, double[::1] sin_t,
                       double[::1] out_val, long long[::1] out_arg):
    """Row-wise max over x of |sum_{m <= x} zeta^phase[m]|; phase < 0 means 0."""
    cdef Py_ssize_t n = phases.shape[0], q = phases.shape[1]
    cdef Py_ssize_t r, i
    cdef double sr, si, v, best
    cdef long long arg
    cdef int ph
    with nogil:
        for r in range(n):
            sr = 0.0
            si = 0.0
            best = -1.0
            arg = 0
            for i in range(q):
                ph = phases[r, i]
                if ph >= 0:
                    sr = sr + cos_t[ph]
                    si = si + sin_t[ph]
                v = sr * sr + si * si
                if v > best:
                    best = v
                    arg = i + 1
            out_val[r] = sqrt(best)
            out_arg[r] = arg
