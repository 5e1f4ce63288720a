"""Binary quadratic forms, representation tests and the union value sieve."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterator, NamedTuple, Optional

import numpy as np

from . import kernels
from .arith import is_prime, kronecker, primes_up_to, valuation
from .harmonic import ResourceError

SIEVE_CAP = int(os.environ.get("QFGAPS_SIEVE_CAP", 10**8))
MAX_MEMBERS = 20
SEGMENT = 1 << 22


class QuadraticForm(NamedTuple):
    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_primitive(self) -> bool:
        return math.gcd(self.a, self.b, self.c) == 1


class Witness(NamedTuple):
    """Prime p with (D/p) = -1 dividing n to the exact odd power ``gamma``."""

    p: int
    gamma: int


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


@dataclass(frozen=True)
class DiscriminantSet:
    """Validated set of discriminants; ``d`` is the lcm of their absolute values.

    No product over an odd-size subset may be a perfect square, which is the
    hypothesis under which a common non-residue r exists.
    """

    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(int(D) for D in self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("discriminant set is empty")
        if len(members) > MAX_MEMBERS:
            raise ValueError(f"at most {MAX_MEMBERS} discriminants supported")
        if len(set(members)) != len(members):
            raise ValueError(f"duplicate discriminants in {members}")
        for D in members:
            if D == 0 or D % 4 not in (0, 1):
                raise ValueError(f"{D} is not a discriminant (must be nonzero and 0 or 1 mod 4)")
        for size in range(1, len(members) + 1, 2):
            for subset in combinations(members, size):
                if is_square(math.prod(subset)):
                    raise ValueError(f"product of {subset} is a perfect square")

    @classmethod
    def of(cls, *members: int) -> "DiscriminantSet":
        return cls(tuple(members))

    @property
    def d(self) -> int:
        return math.lcm(*(abs(D) for D in self.members))

    @property
    def all_negative(self) -> bool:
        return all(D < 0 for D in self.members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def _check_negative_discriminant(D: int) -> None:
    if D >= 0 or D % 4 not in (0, 1):
        raise ValueError(f"{D} is not a negative discriminant")


@lru_cache(maxsize=256)
def reduced_forms(D: int, primitive_only: bool = False) -> tuple[QuadraticForm, ...]:
    """Reduced positive-definite forms of discriminant D.

    Imprimitive forms are included by default since they represent integers
    too; ``primitive_only=True`` gives the class group representatives.
    """
    _check_negative_discriminant(D)
    out = []
    a_max = math.isqrt(-D // 3)
    for a in range(1, a_max + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or (b < 0 and a == c):
                continue
            form = QuadraticForm(a, b, c)
            if primitive_only and not form.is_primitive():
                continue
            out.append(form)
    return tuple(out)


def class_number(D: int) -> int:
    return len(reduced_forms(D, primitive_only=True))


def _represents(form: QuadraticForm, n: int, D: int) -> bool:
    a, b, c = form
    # 4a Q(x, y) = (2ax + by)^2 - D y^2
    y_max = math.isqrt(4 * a * n // -D)
    for y in range(0, y_max + 1):
        r = 4 * a * n + D * y * y
        if r < 0:
            break
        s = math.isqrt(r)
        if s * s != r:
            continue
        for t in (s, -s):
            if (t - b * y) % (2 * a) == 0:
                return True
    return False


def is_represented(n: int, D: int, cap: int = SIEVE_CAP) -> bool:
    """Whether some form of discriminant D < 0 takes the value n >= 1."""
    _check_negative_discriminant(D)
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > cap:
        raise ResourceError(f"n = {n} exceeds the representation cap {cap}")
    return any(_represents(f, n, D) for f in reduced_forms(D))


def is_properly_represented_congruence(n: int, D: int) -> bool:
    """Congruence test: D is a square modulo 4n (so some form of disc D properly represents n)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    m = 4 * n
    b = np.arange(2 * n, dtype=np.int64)
    return bool(np.any((b * b - D) % m == 0))


def is_represented_congruence(n: int, D: int) -> bool:
    """Full representation via proper representation of n / f^2 for f^2 | n."""
    f = 1
    while f * f <= n:
        if n % (f * f) == 0 and is_properly_represented_congruence(n // (f * f), D):
            return True
        f += 1
    return False


def exclusion_witness(n: int, ds: DiscriminantSet, prime_bound: int) -> Optional[dict[int, Witness]]:
    """For every D in ``ds`` a prime p <= prime_bound with (D/p) = -1 and odd v_p(n).

    Primes are tried in ascending order and the first hit per D is kept.
    Returns ``None`` if some D has no such prime.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    found: dict[int, Witness] = {}
    for p in primes_up_to(prime_bound):
        if n % p:
            continue
        pending = [D for D in ds if D not in found and kronecker(D, p) == -1]
        if not pending:
            continue
        g = valuation(n, p)
        if g % 2 == 1:
            for D in pending:
                found[D] = Witness(p, g)
            if len(found) == len(ds):
                break
    if len(found) < len(ds):
        return None
    return {D: found[D] for D in ds}


def check_witness(n: int, D: int, w: Witness) -> Optional[str]:
    """None when ``w`` proves n is not represented by forms of discriminant D."""
    p, g = w
    if not is_prime(p):
        return f"{p} is not prime"
    if kronecker(D, p) != -1:
        return f"({D}/{p}) = {kronecker(D, p)}, not -1"
    if g % 2 == 0 or g < 1:
        return f"exponent {g} is not odd"
    v = valuation(n, p)
    if v != g:
        return f"v_{p}(n) = {v}, witness claims {g}"
    return None


def iter_sieve_segments(ds: DiscriminantSet, X: int, cap: int = SIEVE_CAP, segment: int = SEGMENT) -> Iterator[np.ndarray]:
    """Yield ascending arrays of represented values, one per segment of [1, X]."""
    if not ds.all_negative:
        raise NotImplementedError("value sieve supports negative discriminants only")
    if X > cap:
        raise ResourceError(f"X = {X} exceeds the sieve cap {cap}")
    forms = [f for D in ds for f in reduced_forms(D)]
    lo = 1
    while lo <= X:
        hi = min(X, lo + segment - 1)
        marks = np.zeros(hi - lo + 1, dtype=np.uint8)
        for a, b, c in forms:
            kernels.mark_form_segment(a, b, c, lo, hi, marks)
        yield np.flatnonzero(marks).astype(np.int64) + lo
        lo = hi + 1


def sieve_values(ds: DiscriminantSet, X: int, cap: int = SIEVE_CAP) -> np.ndarray:
    """All n <= X represented by some form of some discriminant in ``ds``."""
    parts = list(iter_sieve_segments(ds, X, cap))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
