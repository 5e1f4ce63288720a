"""Sums of reciprocals of integers coprime to N.

The sum over ``k <= x, gcd(k, N) = 1`` of ``1/k`` is computed exactly as a
rational and compared against

    (phi(N)/N) * (log x + gamma + sum_{p | N} log p / (p - 1))

with error bound ``sigma1*(N) / (8 x^2)``.  Transcendental quantities are
evaluated with mpmath and carry explicit rounding bounds, and every
comparison is decided with those bounds added to the margin.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import gmpy2
import mpmath
import numpy as np

from .arith import (
    DEFAULT_DPS,
    BoundedReal,
    euler_gamma,
    euler_phi,
    factor_with_spf,
    factorize,
    radical,
    rational_to_mpf,
    sigma1_star,
    smallest_prime_factors,
    squarefree_divisors,
)

EXACT_CAP = int(os.environ.get("QFGAPS_EXACT_CAP", 10**6))
MAX_ESCALATIONS = 4


class ResourceError(RuntimeError):
    """A configured cap was exceeded."""


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise ResourceError(
            f"exact mode limited to {cap} terms (asked for {n}); "
            "raise the cap or use the float scans"
        )


def _reciprocal_sum(ks: list[int]) -> tuple[gmpy2.mpz, gmpy2.mpz]:
    """(P, Q) with sum(1/k) = P/Q by binary splitting; not reduced."""
    if not ks:
        return gmpy2.mpz(0), gmpy2.mpz(1)
    terms = [(gmpy2.mpz(1), gmpy2.mpz(k)) for k in ks]
    while len(terms) > 1:
        nxt = []
        for i in range(0, len(terms) - 1, 2):
            (p1, q1), (p2, q2) = terms[i], terms[i + 1]
            nxt.append((p1 * q2 + p2 * q1, q1 * q2))
        if len(terms) % 2:
            nxt.append(terms[-1])
        terms = nxt
    return terms[0]


def _floor(x) -> int:
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, mpmath.mpf):
        return int(mpmath.floor(x))
    return math.floor(x)


def _to_mpf(x, dps: int) -> mpmath.mpf:
    with mpmath.workdps(dps):
        if hasattr(x, "numerator") and hasattr(x, "denominator"):
            return mpmath.mpf(int(x.numerator)) / int(x.denominator)
        return mpmath.mpf(x)


def harmonic_exact(n: int, cap: int = EXACT_CAP) -> gmpy2.mpq:
    """H_n = 1 + 1/2 + ... + 1/n exactly."""
    if n < 1:
        raise ValueError(f"harmonic_exact needs n >= 1, got {n}")
    _check_cap(n, cap)
    p, q = _reciprocal_sum(list(range(1, n + 1)))
    return gmpy2.mpq(p, q)


def coprime_harmonic_exact(N: int, x, cap: int = EXACT_CAP) -> gmpy2.mpq:
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    m = _floor(x)
    _check_cap(m, cap)
    ks = [k for k in range(1, m + 1) if math.gcd(k, N) == 1]
    p, q = _reciprocal_sum(ks)
    return gmpy2.mpq(p, q)


def moebius_expansion(N: int, x, cap: int = EXACT_CAP) -> gmpy2.mpq:
    """sum_{d | N} mu(d)/d * H(floor(x/d)), the same sum computed another way."""
    m = _floor(x)
    total = gmpy2.mpq(0)
    primes = [] if N == 1 else factorize(N).primes
    for d, mu in squarefree_divisors(primes):
        if m // d >= 1:
            total += gmpy2.mpq(mu, d) * harmonic_exact(m // d, cap)
    return total


@dataclass
class HarmonicDecomposition:
    n: int
    h_exact: gmpy2.mpq
    remainder: BoundedReal  # H_n - log n - gamma - 1/(2n)

    @property
    def within_bounds(self) -> bool:
        lo = -mpmath.mpf(1) / (8 * self.n * self.n)
        return self.remainder.lower >= lo and self.remainder.upper <= 0


def harmonic_decomposition(n: int, dps: int = DEFAULT_DPS) -> HarmonicDecomposition:
    h = harmonic_exact(n)
    work = dps + 10
    hv = rational_to_mpf(h, work)
    with mpmath.workdps(work):
        rem = hv.value - mpmath.log(n) - euler_gamma(work) - mpmath.mpf(1) / (2 * n)
    err = hv.error + 4 * mpmath.mpf(10) ** (-work + 2) * (abs(hv.value) + 1)
    return HarmonicDecomposition(n, h, BoundedReal(rem, err))


def _log_sum_primes(primes: list[int]) -> mpmath.mpf:
    return mpmath.fsum(mpmath.log(p) / (p - 1) for p in primes)


def coprime_harmonic_main_term(N: int, x, dps: int = DEFAULT_DPS) -> BoundedReal:
    """(phi(N)/N)(log x + gamma + sum_{p|N} log p/(p-1)), error <= 10^-(dps-5)."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    work = dps + 10
    fac = factorize(N)
    with mpmath.workdps(work):
        xv = _to_mpf(x, work)
        if xv <= 1:
            raise ValueError(f"x must exceed 1, got {x}")
        ratio = mpmath.mpf(euler_phi(fac)) / N
        value = ratio * (mpmath.log(xv) + euler_gamma(work) + _log_sum_primes(fac.primes))
    # (number of primes + 6) roundings at `work` digits, each relative 10^-(work-1)
    err = (len(fac) + 6) * (abs(value) + 1) * mpmath.mpf(10) ** (-work + 1)
    return BoundedReal(value, err)


def error_bound_value(N: int, x, dps: int = DEFAULT_DPS) -> BoundedReal:
    """sigma1*(N) / (8 x^2)."""
    work = dps + 10
    with mpmath.workdps(work):
        xv = _to_mpf(x, work)
        value = mpmath.mpf(sigma1_star(N)) / (8 * xv * xv)
    return BoundedReal(value, 4 * abs(value) * mpmath.mpf(10) ** (-work + 1))


def _loglogs(n, work: int) -> mpmath.mpf:
    with mpmath.workdps(work):
        ln = mpmath.log(n)
        lln = mpmath.log(ln)
        return ln + lln + mpmath.log(lln)


def corollary_bounds(N: int, dps: int = DEFAULT_DPS) -> tuple[BoundedReal, BoundedReal]:
    """(phi(N)/N) log N and (phi(N)/N)(log N + loglog N + logloglog N + 4)."""
    if N < 5:
        raise ValueError(f"corollary bounds need N >= 5, got {N}")
    work = dps + 10
    with mpmath.workdps(work):
        ratio = mpmath.mpf(euler_phi(N)) / N
        lower = ratio * mpmath.log(N)
        upper = ratio * (_loglogs(N, work) + 4)
    unit = mpmath.mpf(10) ** (-work + 2)
    return BoundedReal(lower, (lower + 1) * unit), BoundedReal(upper, (upper + 1) * unit)


def compare(a: BoundedReal, b: BoundedReal) -> Optional[int]:
    """-1 if a < b, 1 if a > b, None if the error bounds overlap."""
    if a.upper < b.lower:
        return -1
    if a.lower > b.upper:
        return 1
    return None


@dataclass
class CoprimeHarmonicReport:
    N: int
    x: object
    exact_sum: gmpy2.mpq
    main_term: BoundedReal
    error_term: BoundedReal
    error_bound: BoundedReal
    status: str  # "pass", "fail" or "indeterminate"
    dps: int
    lower_bound: Optional[BoundedReal] = None
    upper_bound: Optional[BoundedReal] = None
    sandwich: Optional[str] = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "pass" and self.sandwich in (None, "pass")

    def to_dict(self) -> dict:
        def real(b):
            return None if b is None else {"value": mpmath.nstr(b.value, 25), "error": mpmath.nstr(b.error, 3)}

        return {
            "N": self.N,
            "x": str(self.x),
            "exact_sum": f"{self.exact_sum.numerator}/{self.exact_sum.denominator}",
            "main_term": real(self.main_term),
            "error_term": real(self.error_term),
            "error_bound": real(self.error_bound),
            "status": self.status,
            "lower_bound": real(self.lower_bound),
            "upper_bound": real(self.upper_bound),
            "sandwich": self.sandwich,
            "dps": self.dps,
            "notes": list(self.notes),
        }


def _is_x_equal_N(N: int, x) -> bool:
    try:
        return x == N
    except TypeError:
        return False


def lemma_applies(N: int, x) -> bool:
    """True when x/d is an integer for every squarefree d | N, i.e. rad(N) | x.

    The error bound comes from the harmonic-number lemma evaluated at x/d,
    and that lemma only covers integers.  Off this set the bound is not
    guaranteed and fails in practice (N = 2, x = 3 already does).
    """
    if isinstance(x, (int, np.integer)):
        return int(x) % radical(N) == 0
    if hasattr(x, "denominator") and x.denominator == 1:
        return int(x.numerator) % radical(N) == 0
    return False


def verify_error_bound(N: int, x, dps: int = DEFAULT_DPS, exact_sum=None) -> CoprimeHarmonicReport:
    """Check |E_N(x)| <= sigma1*(N)/(8x^2), escalating precision when undecided.

    When ``x == N >= 5`` the report also carries the sandwich
    ``lower < sum < upper``.  Pairs with rad(N) not dividing x are still
    evaluated, with a note, see :func:`lemma_applies`.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    s = coprime_harmonic_exact(N, x) if exact_sum is None else exact_sum
    cur = dps
    for _ in range(MAX_ESCALATIONS + 1):
        sv = rational_to_mpf(s, cur + 10)
        main = coprime_harmonic_main_term(N, x, cur)
        bound = error_bound_value(N, x, cur)
        with mpmath.workdps(cur + 10):
            e = BoundedReal(sv.value - main.value, sv.error + main.error)
            abs_e = BoundedReal(abs(e.value), e.error)
        verdict = compare(abs_e, bound)
        if verdict is not None:
            break
        cur *= 2
    status = {-1: "pass", 1: "fail", None: "indeterminate"}[verdict]
    report = CoprimeHarmonicReport(N, x, s, main, e, bound, status, cur)
    if not lemma_applies(N, x):
        report.notes.append("rad(N) does not divide x: the bound is outside its proven range here")
    if _is_x_equal_N(N, x) and N >= 5:
        lower, upper = corollary_bounds(N, cur)
        report.lower_bound, report.upper_bound = lower, upper
        lo, hi = compare(lower, sv), compare(sv, upper)
        if lo == -1 and hi == -1:
            report.sandwich = "pass"
        elif lo is None or hi is None:
            report.sandwich = "indeterminate"
        else:
            report.sandwich = "fail"
    return report


# ---------------------------------------------------------------------------
# scans


@dataclass
class ScanResult:
    checked: int
    violations: list
    indeterminate: list
    min_margin: float = math.inf
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations and not self.indeterminate


def theorem_scan(N_max: int, multipliers=(1, 2, 10), N_min: int = 2, dps: int = DEFAULT_DPS) -> ScanResult:
    """|E_N(x)| <= sigma1*(N)/(8x^2) for N_min <= N <= N_max and x = m*N.

    Exact sums for a fixed N are built incrementally over the sorted x list.
    """
    result = ScanResult(0, [], [])
    for N in range(max(2, N_min), N_max + 1):
        xs = sorted(set(m * N for m in multipliers))
        acc = gmpy2.mpq(0)
        prev = 0
        for x in xs:
            ks = [k for k in range(prev + 1, x + 1) if math.gcd(k, N) == 1]
            p, q = _reciprocal_sum(ks)
            acc += gmpy2.mpq(p, q)
            prev = x
            rep = verify_error_bound(N, x, dps, exact_sum=acc)
            result.checked += 1
            if rep.status == "fail":
                result.violations.append((N, x))
            elif rep.status == "indeterminate":
                result.indeterminate.append((N, x))
            else:
                margin = float(rep.error_bound.value - abs(rep.error_term.value)) / float(rep.error_bound.value)
                result.min_margin = min(result.min_margin, margin)
    return result


def lemma_scan(n_max: int, exact_up_to: int = 10**4, dps: int = DEFAULT_DPS) -> ScanResult:
    """-1/(8n^2) <= H_n - log n - gamma - 1/(2n) <= 0 for every n <= n_max.

    Exact rationals for n <= ``exact_up_to``; beyond that a running mpmath
    sum whose accumulated rounding error is tracked and added to the margin.
    """
    result = ScanResult(0, [], [])
    work = dps + 10
    h_exact = gmpy2.mpq(0)
    with mpmath.workdps(work):
        unit = mpmath.mpf(10) ** (-work + 1)
        gamma = euler_gamma(work)
        h = mpmath.mpf(0)
        h_err = mpmath.mpf(0)
        for n in range(1, n_max + 1):
            if n <= exact_up_to:
                h_exact += gmpy2.mpq(1, n)
                h = mpmath.mpf(int(h_exact.numerator)) / int(h_exact.denominator)
                h_err = unit * h
            else:
                h = h + mpmath.mpf(1) / n
                h_err += 2 * unit * h
            rem = h - mpmath.log(n) - gamma - mpmath.mpf(1) / (2 * n)
            err = h_err + 6 * unit * (h + 1)
            lo = -mpmath.mpf(1) / (8 * n * n)
            result.checked += 1
            if rem + err < lo or rem - err > 0:
                result.violations.append(n)
            elif rem - err < lo or rem + err > 0:
                result.indeterminate.append(n)
            else:
                margin = min(rem - lo, -rem) * 8 * n * n
                result.min_margin = min(result.min_margin, float(margin))
    return result


def corollary_scan(N_max: int, N_min: int = 5, dps: int = DEFAULT_DPS) -> ScanResult:
    """Sandwich check for every N_min <= N <= N_max.

    The sum is assembled in double precision from a table of harmonic
    numbers through the Moebius expansion, with a rigorous float error
    bound.  Any N whose margin is not larger than that bound is re-decided
    exactly by :func:`verify_error_bound`.
    """
    result = ScanResult(0, [], [])
    n_max = N_max + 1
    u = 2.0**-53
    inv = 1.0 / np.arange(1, n_max + 1, dtype=np.float64)
    H = np.concatenate(([0.0], np.cumsum(inv)))
    spf = smallest_prime_factors(N_max)
    for N in range(max(5, N_min), N_max + 1):
        primes = [p for p, _ in factor_with_spf(N, spf)]
        s = 0.0
        weight = 0.0
        for d, mu in squarefree_divisors(primes):
            s += mu * H[N // d] / d
            weight += 1.0 / d
        h_n = H[N]
        s_err = 2.0 * weight * (N + 8) * u * h_n
        phi_ratio = 1.0
        for p in primes:
            phi_ratio *= 1.0 - 1.0 / p
        ln = math.log(N)
        lln = math.log(ln)
        lower = phi_ratio * ln
        upper = phi_ratio * (ln + lln + math.log(lln) + 4.0)
        b_err = 64 * u * (upper + 1.0) + 16 * u * len(primes) * upper
        m_lo = s - lower
        m_hi = upper - s
        result.checked += 1
        if min(m_lo, m_hi) <= s_err + b_err:
            rep = verify_error_bound(N, N, dps)
            result.notes.append(f"N={N} re-decided exactly: {rep.sandwich}")
            if rep.sandwich == "fail":
                result.violations.append(N)
            elif rep.sandwich != "pass":
                result.indeterminate.append(N)
            continue
        result.min_margin = min(result.min_margin, m_lo, m_hi)
    return result
