"""Pure-Python (numpy) versions of the compiled kernels in ``_kernels.pyx``."""

import math

import numpy as np


def _mark_range(a, b, c, y, t0, t1, lo, hi, out):
    x0 = -((-(t0 - b * y)) // (2 * a))
    x1 = (t1 - b * y) // (2 * a)
    if x1 < x0:
        return
    x = np.arange(x0, x1 + 1, dtype=np.int64)
    v = a * x * x + b * y * x + c * y * y
    v = v[(v >= lo) & (v <= hi)]
    out[v - lo] = 1


def mark_form_segment(a, b, c, lo, hi, out):
    D = b * b - 4 * a * c
    if D >= 0 or a <= 0:
        raise ValueError("positive-definite form required")
    y = 0
    while True:
        r_hi = 4 * a * hi + D * y * y
        if r_hi < 0:
            break
        s_hi = math.isqrt(r_hi)
        r_lo = 4 * a * lo + D * y * y
        if r_lo <= 0:
            _mark_range(a, b, c, y, -s_hi, s_hi, lo, hi, out)
        else:
            s_lo = math.isqrt(r_lo)
            if s_lo * s_lo < r_lo:
                s_lo += 1
            if s_lo <= s_hi:
                _mark_range(a, b, c, y, -s_hi, -s_lo, lo, hi, out)
                _mark_range(a, b, c, y, s_lo, s_hi, lo, hi, out)
        y += 1


def partial_sum_maxima(phases, cos_t, sin_t, out_val, out_arg, chunk=1 << 22):
    n, q = phases.shape
    rows = max(1, chunk // max(q, 1))
    for start in range(0, n, rows):
        ph = phases[start : start + rows]
        unit = ph >= 0
        idx = np.where(unit, ph, 0)
        sr = np.cumsum(np.where(unit, cos_t[idx], 0.0), axis=1)
        si = np.cumsum(np.where(unit, sin_t[idx], 0.0), axis=1)
        v = sr * sr + si * si
        arg = np.argmax(v, axis=1)
        out_val[start : start + rows] = np.sqrt(v[np.arange(len(ph)), arg])
        out_arg[start : start + rows] = arg + 1
