"""Integer arithmetic: primes, factorization, multiplicative functions, Kronecker symbol.

Everything here works on Python ints (arbitrary precision).  Real-valued
results are returned as :class:`BoundedReal`, an mpmath value together with
a conservative bound on its rounding error.
"""

from __future__ import annotations

import math
import os
from functools import lru_cache
from typing import Iterable, NamedTuple

import gmpy2
import mpmath
import numpy as np

DEFAULT_DPS = max(30, int(os.environ.get("QFGAPS_PRECISION", "30")))

# Euler's constant, 65 significant digits.
EULER_GAMMA_STR = "0.57721566490153286060651209008240243104215933593992359880576723488"


class BoundedReal(NamedTuple):
    """A real number known up to ``|true - value| <= error``."""

    value: mpmath.mpf
    error: mpmath.mpf

    @property
    def lower(self) -> mpmath.mpf:
        return self.value - self.error

    @property
    def upper(self) -> mpmath.mpf:
        return self.value + self.error

    def __float__(self) -> float:
        return float(self.value)


def euler_gamma(dps: int = DEFAULT_DPS) -> mpmath.mpf:
    if dps > 60:
        with mpmath.workdps(dps):
            return +mpmath.euler
    with mpmath.workdps(dps):
        return mpmath.mpf(EULER_GAMMA_STR)


def ulp_bound(x, dps: int) -> mpmath.mpf:
    """Generous bound for one rounding of ``x`` at ``dps`` digits."""
    with mpmath.workdps(dps + 10):
        return (abs(mpmath.mpf(x)) + 1) * mpmath.mpf(10) ** (-dps + 1)


# ---------------------------------------------------------------------------
# primes


class _SieveCache:
    limit = 0
    primes = np.zeros(0, dtype=np.int64)


def _sieve(limit: int) -> np.ndarray:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def primes_array(limit: int) -> np.ndarray:
    """Ascending numpy array of primes <= limit (sieve results are cached)."""
    limit = int(limit)
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    if limit > _SieveCache.limit:
        new_limit = max(limit, 2 * _SieveCache.limit, 1 << 16)
        primes = _sieve(new_limit)
        primes.setflags(write=False)
        _SieveCache.primes, _SieveCache.limit = primes, new_limit
    primes = _SieveCache.primes
    return primes[: np.searchsorted(primes, limit, side="right")]


def primes_up_to(x) -> list[int]:
    """All primes p <= x in ascending order."""
    return primes_array(math.floor(x)).tolist()


def nth_prime(k: int) -> int:
    if k < 1:
        raise ValueError(f"nth_prime needs k >= 1, got {k}")
    bound = 30
    if k >= 6:
        bound = int(k * (math.log(k) + math.log(math.log(k)))) + 10
    while True:
        primes = primes_array(bound)
        if len(primes) >= k:
            return int(primes[k - 1])
        bound *= 2


def prime_bound_slack(k: int) -> mpmath.mpf:
    """2k(log k + 1) - p_k at 40 digits; zero exactly when k = 1."""
    p = nth_prime(k)
    if k == 1:
        return mpmath.mpf(0)
    with mpmath.workdps(40):
        return 2 * k * (mpmath.log(k) + 1) - p


def check_prime_bound(k: int) -> bool:
    """Whether p_k <= 2k(log k + 1).

    For k >= 2 the right side is irrational, so the sign of the slack at
    40 digits decides the comparison.
    """
    return prime_bound_slack(k) >= 0


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin below 3.3e24, strong probable prime above."""
    if n < 2:
        return False
    if n < 1 << 20:
        primes = primes_array(1 << 20)
        i = np.searchsorted(primes, n)
        return i < len(primes) and int(primes[i]) == n
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# factorization


class Factorization(tuple):
    """Ascending ``((p, e), ...)`` with ``e >= 1``; behaves like a tuple of pairs."""

    def __new__(cls, entries: Iterable[tuple[int, int]] = ()):
        entries = tuple((int(p), int(e)) for p, e in entries)
        for (p, e), nxt in zip(entries, entries[1:] + ((None, None),)):
            if e < 1:
                raise ValueError(f"exponent of {p} must be >= 1")
            if nxt[0] is not None and nxt[0] <= p:
                raise ValueError("primes must be strictly increasing")
        return super().__new__(cls, entries)

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self]

    def value(self) -> int:
        out = 1
        for p, e in self:
            out *= p**e
        return out

    def is_valid(self) -> bool:
        return all(is_prime(p) for p, _ in self)

    def __repr__(self) -> str:
        return "Factorization(" + " * ".join(f"{p}^{e}" for p, e in self) + ")"


def factorize(n: int, trial_limit: int = 10**6) -> Factorization:
    """Factor n >= 2 by trial division over sieved primes.

    A cofactor left after trial division that is neither provably prime
    (below ``trial_limit**2``) nor prime by :func:`is_prime` is split with
    Pollard-Brent rho.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"factorize needs n >= 2, got {n}")
    entries = []
    limit = min(math.isqrt(n), trial_limit)
    for p in primes_array(limit).tolist():
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            entries.append((p, e))
    if n > 1:
        if n < trial_limit * trial_limit or is_prime(n):
            entries.append((n, 1))
        else:
            big: dict[int, int] = {}
            for q in _split_large(n):
                big[q] = big.get(q, 0) + 1
            entries.extend(sorted(big.items()))
    return Factorization(entries)


def _pollard_brent(n: int, seed: int) -> int:
    """A nontrivial factor of the odd composite n, or n on failure."""
    y, c, m = seed % n, (2 * seed + 1) % n, 128
    g = r = q = 1
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        k = 0
        while k < r and g == 1:
            ys = y
            for _ in range(min(m, r - k)):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            g = math.gcd(q, n)
            k += m
        r *= 2
    if g == n:
        g = 1
        while g == 1:
            ys = (ys * ys + c) % n
            g = math.gcd(abs(x - ys), n)
    return g


def _split_large(n: int) -> list[int]:
    """Prime factors (with repetition) of n, which has no small factors."""
    if is_prime(n):
        return [n]
    r = math.isqrt(n)
    if r * r == n:
        return _split_large(r) * 2
    for seed in range(1, 200):
        g = _pollard_brent(n, seed)
        if 1 < g < n:
            return _split_large(g) + _split_large(n // g)
    raise ValueError(f"could not split cofactor {n}")


def smallest_prime_factors(limit: int) -> np.ndarray:
    """spf[n] for 0 <= n <= limit (spf[0] = spf[1] = 0)."""
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in primes_array(math.isqrt(limit)).tolist():
        block = spf[p * p :: p]
        block[block == 0] = p
    primes = primes_array(limit)
    spf[primes] = primes
    return spf


def factor_with_spf(n: int, spf: np.ndarray) -> list[tuple[int, int]]:
    out = []
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out.append((p, e))
    return out


def valuation(n: int, p: int) -> int:
    """Exponent of p in n (n >= 1, p prime)."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if n < 1:
        raise ValueError(f"valuation needs n >= 1, got {n}")
    if n < (1 << 64):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        return e
    # gmpy2 removes all factors of p in one call; n is typically a big int
    return int(gmpy2.remove(gmpy2.mpz(n), p)[1])


# ---------------------------------------------------------------------------
# multiplicative functions


def _fac(n) -> Factorization:
    if isinstance(n, Factorization):
        return n
    if n < 1:
        raise ValueError(f"expected a positive integer, got {n}")
    return Factorization() if n == 1 else factorize(n)


def euler_phi(n) -> int:
    out = 1
    for p, e in _fac(n):
        out *= p ** (e - 1) * (p - 1)
    return out


def moebius(n) -> int:
    f = _fac(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def radical(n) -> int:
    out = 1
    for p, _ in _fac(n):
        out *= p
    return out


def sigma1_star(n) -> int:
    """Sum of the squarefree divisors of n, i.e. prod_{p | n} (p + 1)."""
    out = 1
    for p, _ in _fac(n):
        out *= p + 1
    return out


def is_squarefree(n) -> bool:
    return all(e == 1 for _, e in _fac(n))


def squarefree_divisors(primes: list[int]) -> list[tuple[int, int]]:
    """``(d, mu(d))`` for every squarefree d built from ``primes``."""
    out = [(1, 1)]
    for p in primes:
        out += [(d * p, -m) for d, m in out]
    return out


def divisors(n: int) -> list[int]:
    out = [1]
    for p, e in _fac(n):
        out = [d * p**i for d in out for i in range(e + 1)]
    return sorted(out)


# ---------------------------------------------------------------------------
# Kronecker symbol


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for arbitrary integers a, n."""
    a, n = int(a), int(n)
    if n == 0:
        return 1 if a in (1, -1) else 0
    if a % 2 == 0 and n % 2 == 0:
        return 0
    sign = 1
    v = (n & -n).bit_length() - 1
    n >>= v
    if v % 2 and a % 8 in (3, 5):
        sign = -sign
    if n < 0:
        n = -n
        if a < 0:
            sign = -sign
    # n odd and positive now: Jacobi symbol with a possibly negative
    a %= n
    while a:
        v = (a & -a).bit_length() - 1
        a >>= v
        if v % 2 and n % 8 in (3, 5):
            sign = -sign
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a, n = n % a, a
    return sign if n == 1 else 0


# ---------------------------------------------------------------------------
# primorials and Mertens products


def primorial(n: int) -> int:
    """Product of the first n primes."""
    if n < 1:
        raise ValueError(f"primorial needs n >= 1, got {n}")
    primes = primes_array(nth_prime(n))[:n].tolist()
    return int(_product(primes))


def _product(values: list[int]) -> gmpy2.mpz:
    values = [gmpy2.mpz(v) for v in values]
    if not values:
        return gmpy2.mpz(1)
    while len(values) > 1:
        nxt = [values[i] * values[i + 1] for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            nxt.append(values[-1])
        values = nxt
    return values[0]


@lru_cache(maxsize=64)
def mertens_product_exact(n: int) -> gmpy2.mpq:
    """c_n = prod_{j <= n} (1 - 1/p_j) as an exact rational."""
    primes = primes_array(nth_prime(n))[:n].tolist()
    return gmpy2.mpq(_product([p - 1 for p in primes]), _product(primes))


def mertens_product(n: int, dps: int = DEFAULT_DPS) -> BoundedReal:
    """c_n evaluated from the exact rational; error is a single rounding."""
    if n < 1:
        raise ValueError(f"mertens_product needs n >= 1, got {n}")
    q = mertens_product_exact(n)
    with mpmath.workdps(dps):
        value = mpmath.mpf(int(q.numerator)) / int(q.denominator)
    return BoundedReal(value, ulp_bound(value, dps))


def rational_to_mpf(q, dps: int) -> BoundedReal:
    with mpmath.workdps(dps):
        value = mpmath.mpf(int(q.numerator)) / int(q.denominator)
    return BoundedReal(value, ulp_bound(value, dps))
