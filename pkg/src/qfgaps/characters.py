"""Dirichlet characters mod q and maximal partial character sums.

Characters are encoded by integer phases: with E the exponent of the unit
group, ``chi(m) = exp(2 pi i phase(m) / E)`` and ``phase(m) = -1`` when
``gcd(m, q) > 1``.  A character group builds the phase matrix (characters
by residues 1..q) and hands it to the partial-sum kernel.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, NamedTuple, Optional, Union

import gmpy2
import mpmath
import numpy as np

from . import kernels
from .arith import (
    DEFAULT_DPS,
    BoundedReal,
    divisors,
    euler_gamma,
    euler_phi,
    factorize,
    is_squarefree,
    mertens_product_exact,
    primes_array,
    nth_prime,
    primorial,
    rational_to_mpf,
)
from .harmonic import ResourceError

CHAR_CAP = int(os.environ.get("QFGAPS_CHAR_CAP", 10**4))
CHUNK_ELEMENTS = 1 << 22


class UnitComponent(NamedTuple):
    """One cyclic factor of (Z/qZ)^*, living on the prime power ``modulus``."""

    prime: int
    modulus: int
    generator: int  # residue mod q: generates this factor, 1 on the others
    order: int
    kind: str  # "cyclic", "sign" (-1 mod 2^e) or "five" (5 mod 2^e)


def _primitive_root_prime_power(p: int, e: int) -> int:
    pe = p**e
    factors = factorize(p - 1).primes if p > 2 else []
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in factors):
            if e >= 2 and pow(g, p - 1, p * p) == 1:
                g += p
            return g % pe
    raise AssertionError("unreachable: every odd prime has a primitive root")


def _crt_lift(residue: int, modulus: int, q: int) -> int:
    """x = residue (mod modulus), x = 1 (mod q / modulus)."""
    rest = q // modulus
    if rest == 1:
        return residue % q
    t = (residue - 1) * pow(rest, -1, modulus) % modulus
    return (1 + rest * t) % q


class CharacterGroup:
    """The character group mod q with its discrete-log tables."""

    def __init__(self, q: int, cap: int = CHAR_CAP):
        if q < 3:
            raise ValueError(f"modulus must be >= 3, got {q}")
        if q > cap:
            raise ResourceError(f"q = {q} exceeds the character cap {cap}")
        self.q = q
        self.factorization = factorize(q)
        comps: list[UnitComponent] = []
        logs: list[np.ndarray] = []
        m = np.arange(1, q + 1, dtype=np.int64)
        for p, e in self.factorization:
            pe = p**e
            r = m % pe
            if p == 2:
                if e == 1:
                    continue
                sign = np.where(r % 4 == 1, 0, 1)
                sign[r % 2 == 0] = -1
                comps.append(UnitComponent(2, pe, _crt_lift(pe - 1, pe, q), 2, "sign"))
                logs.append(sign)
                if e >= 3:
                    order = pe // 4
                    table = np.full(pe, -1, dtype=np.int64)
                    x = 1
                    for i in range(order):
                        table[x] = i
                        x = x * 5 % pe
                    u = np.where(r % 4 == 1, r, (pe - r) % pe)
                    lg = np.where(r % 2 == 1, table[u], -1)
                    comps.append(UnitComponent(2, pe, _crt_lift(5, pe, q), order, "five"))
                    logs.append(lg)
            else:
                g = _primitive_root_prime_power(p, e)
                order = pe - pe // p
                table = np.full(pe, -1, dtype=np.int64)
                x = 1
                for i in range(order):
                    table[x] = i
                    x = x * g % pe
                comps.append(UnitComponent(p, pe, _crt_lift(g, pe, q), order, "cyclic"))
                logs.append(table[r])
        self.components = tuple(comps)
        self.orders = tuple(c.order for c in comps)
        self.exponent = math.lcm(*self.orders) if comps else 1
        self.logs = np.stack(logs, axis=1) if logs else np.zeros((q, 0), dtype=np.int64)
        unit = np.array([math.gcd(int(v), q) == 1 for v in m])
        self.unit_mask = unit
        self.logs[~unit] = -1
        self.phi = int(unit.sum())

    def __len__(self) -> int:
        return self.phi

    def exponent_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(o) for o in self.orders)))

    def phases(self, exps) -> np.ndarray:
        """int32 phase matrix, one row per exponent tuple, columns m = 1..q."""
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, len(self.orders))
        E = self.exponent
        scale = np.array([E // o for o in self.orders], dtype=np.int64)
        w = exps * scale
        out = np.zeros((len(exps), self.q), dtype=np.int64)
        for j in range(len(self.orders)):
            out += np.multiply.outer(w[:, j], np.maximum(self.logs[:, j], 0))
        out %= E
        out[:, ~self.unit_mask] = -1
        return out.astype(np.int32)

    def root_tables(self) -> tuple[np.ndarray, np.ndarray]:
        ang = 2.0 * np.pi * np.arange(self.exponent) / self.exponent
        return np.cos(ang), np.sin(ang)

    def conductors(self, phases: np.ndarray) -> np.ndarray:
        """Smallest f | q such that chi is trivial on units = 1 (mod f)."""
        q = self.q
        cond = np.zeros(len(phases), dtype=np.int64)
        m = np.arange(1, q + 1)
        for f in divisors(q):
            cols = np.flatnonzero(self.unit_mask & (m % f == 1 % f))
            induced = np.all(phases[:, cols] == 0, axis=1)
            cond[(cond == 0) & induced] = f
        return cond

    @cached_property
    def characters(self) -> list["DirichletCharacter"]:
        tuples = self.exponent_tuples()
        ph = self.phases(tuples)
        cond = self.conductors(ph)
        minus_one = ph[:, self.q - 2]
        out = []
        for i, t in enumerate(tuples):
            out.append(
                DirichletCharacter(
                    group=self,
                    index=i,
                    exponents=t,
                    is_principal=not any(t),
                    parity=1 if minus_one[i] == 0 else -1,
                    conductor=int(cond[i]),
                )
            )
        return out


@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    group: CharacterGroup = field(repr=False)
    index: int
    exponents: tuple[int, ...]
    is_principal: bool
    parity: int
    conductor: int

    @property
    def q(self) -> int:
        return self.group.q

    @property
    def generator_decomposition(self) -> tuple[UnitComponent, ...]:
        return self.group.components

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.q

    @property
    def is_real(self) -> bool:
        return all((2 * a) % o == 0 for a, o in zip(self.exponents, self.group.orders))

    @property
    def order(self) -> int:
        return math.lcm(*(o // math.gcd(a, o) for a, o in zip(self.exponents, self.group.orders))) if self.exponents else 1

    def phase_row(self) -> np.ndarray:
        return self.group.phases([self.exponents])[0]

    def values(self) -> np.ndarray:
        """chi(1), ..., chi(q) as complex128."""
        ph = self.phase_row()
        cos_t, sin_t = self.group.root_tables()
        idx = np.maximum(ph, 0)
        return np.where(ph >= 0, cos_t[idx] + 1j * sin_t[idx], 0.0)

    def __call__(self, m: int) -> complex:
        return complex(self.values()[(m - 1) % self.q])


def characters(q: int, cap: int = CHAR_CAP) -> list[DirichletCharacter]:
    return CharacterGroup(q, cap).characters


def float_error_bound(q: int) -> float:
    return q * 2.0**-45


class PartialSumMax(NamedTuple):
    value: float
    argmax: int
    error: float


def max_partial_sum(chi: DirichletCharacter) -> PartialSumMax:
    """max over 1 <= x <= q of |sum_{m <= x} chi(m)|, in double precision."""
    if chi.is_principal:
        raise ValueError("the principal character is excluded")
    ph = np.ascontiguousarray(chi.phase_row()[None, :])
    cos_t, sin_t = chi.group.root_tables()
    val = np.zeros(1)
    arg = np.zeros(1, dtype=np.int64)
    kernels.partial_sum_maxima(ph, cos_t, sin_t, val, arg)
    return PartialSumMax(float(val[0]), int(arg[0]), float_error_bound(chi.q))


def exact_real_partial_max(phases: np.ndarray, E: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer partial-sum maxima for real characters (phases in {-1, 0, E/2})."""
    vals = np.where(phases < 0, 0, np.where(phases == 0, 1, -1)).astype(np.int64)
    s = np.abs(np.cumsum(vals, axis=1))
    arg = np.argmax(s, axis=1)
    return s[np.arange(len(s)), arg], arg + 1


def _loglogs(q: float) -> float:
    ln = math.log(q)
    lln = math.log(ln)
    return ln + lln + math.log(lln)


def pv_bound_new(q: int) -> float:
    """(phi(q)/sqrt q)(log q + loglog q + logloglog q + 4)."""
    if q < 5:
        raise ValueError(f"bound requires q >= 5, got {q}")
    return euler_phi(q) / math.sqrt(q) * (_loglogs(q) + 4.0)


def pv_bound_classic(q: int) -> float:
    """sqrt(q) log q."""
    if q < 5:
        raise ValueError(f"bound requires q >= 5, got {q}")
    return math.sqrt(q) * math.log(q)


class CharacterRow(NamedTuple):
    index: int
    exponents: tuple[int, ...]
    parity: int
    primitive: bool
    real: bool
    max_partial_sum: float
    argmax: int


@dataclass
class CharacterSumReport:
    q: int
    phi: int
    rows: list[CharacterRow]
    bound_new: Optional[float]
    bound_classic: Optional[float]
    error_bound: float
    in_scope: bool
    all_pass: Optional[bool]
    real_exact_ok: bool
    failures: list[int] = field(default_factory=list)

    @property
    def worst(self) -> Optional[CharacterRow]:
        return max(self.rows, key=lambda r: r.max_partial_sum, default=None)

    def summary(self) -> dict:
        w = self.worst
        return {
            "q": self.q,
            "phi": self.phi,
            "n_chars": self.phi,
            "worst_char": None if w is None else w.index,
            "worst_max": None if w is None else w.max_partial_sum,
            "bound_new": self.bound_new,
            "bound_classic": self.bound_classic,
            "pass": self.all_pass,
        }


def pv_check(q: int, cap: int = CHAR_CAP) -> CharacterSumReport:
    """Maximal partial sums of every nonprincipal character mod q against the bound.

    Real characters are recomputed in integer arithmetic and must agree
    with the floating-point maxima.  Moduli 3 and 4 are evaluated but lie
    outside the range where the bound is stated (``in_scope = False``).
    """
    group = CharacterGroup(q, cap)
    tuples = group.exponent_tuples()[1:]  # drop the principal character
    cos_t, sin_t = group.root_tables()
    err = float_error_bound(q)
    in_scope = q >= 5
    bound_new = pv_bound_new(q) if in_scope else None
    bound_classic = pv_bound_classic(q) if in_scope else None
    rows: list[CharacterRow] = []
    failures: list[int] = []
    real_ok = True
    rows_per_chunk = max(1, CHUNK_ELEMENTS // q)
    half = group.exponent // 2
    for start in range(0, len(tuples), rows_per_chunk):
        chunk = tuples[start : start + rows_per_chunk]
        ph = np.ascontiguousarray(group.phases(chunk))
        cond = group.conductors(ph)
        val = np.zeros(len(chunk))
        arg = np.zeros(len(chunk), dtype=np.int64)
        kernels.partial_sum_maxima(ph, cos_t, sin_t, val, arg)
        is_real = np.all((ph <= 0) | (ph == half), axis=1)
        if is_real.any():
            exact, _ = exact_real_partial_max(ph[is_real], group.exponent)
            if np.any(np.abs(exact - val[is_real]) > err):
                real_ok = False
            if in_scope and np.any(exact > bound_new):
                real_ok = False
        minus_one = ph[:, q - 2]
        for i, t in enumerate(chunk):
            idx = start + i + 1
            row = CharacterRow(
                idx,
                t,
                1 if minus_one[i] == 0 else -1,
                bool(cond[i] == q),
                bool(is_real[i]),
                float(val[i]),
                int(arg[i]),
            )
            rows.append(row)
            # bound evaluated in double; 1e-12 relative margin covers its rounding
            if in_scope and not row.max_partial_sum + err <= bound_new * (1 - 1e-12):
                failures.append(idx)
    all_pass = (not failures and real_ok) if in_scope else None
    return CharacterSumReport(q, group.phi, rows, bound_new, bound_classic, err, in_scope, all_pass, real_ok, failures)


# ---------------------------------------------------------------------------
# constants around the bound


NAMED_CONSTANTS: dict[str, Callable[[], mpmath.mpf]] = {
    "3/(8pi)": lambda: 3 / (8 * mpmath.pi),
    "3/(4pi^2)": lambda: 3 / (4 * mpmath.pi**2),
    "1/(4pi)": lambda: 1 / (4 * mpmath.pi),
    "1/(2pi^2)": lambda: 1 / (2 * mpmath.pi**2),
}

# (constant, parity chi(-1), q squarefree required)
BORDIGNON_CASES = (
    ("3/(8pi)", -1, False),
    ("3/(4pi^2)", 1, False),
    ("1/(4pi)", -1, True),
    ("1/(2pi^2)", 1, True),
)

ConstantLike = Union[str, int, float, Fraction, mpmath.mpf, Callable[[], mpmath.mpf]]


def _constant(c: ConstantLike, dps: int) -> mpmath.mpf:
    with mpmath.workdps(dps):
        if isinstance(c, str):
            if c in NAMED_CONSTANTS:
                return +NAMED_CONSTANTS[c]()
            return mpmath.mpf(Fraction(c).numerator) / Fraction(c).denominator
        if isinstance(c, Fraction):
            return mpmath.mpf(c.numerator) / c.denominator
        if callable(c):
            return +c()
        return mpmath.mpf(c)


class Threshold(NamedTuple):
    n: int
    primorial: int
    c_n: BoundedReal
    flagged: bool


def _as_fraction(key) -> Optional[Fraction]:
    if isinstance(key, (int, Fraction)):
        return Fraction(key)
    if isinstance(key, str) and key not in NAMED_CONSTANTS:
        return Fraction(key)
    return None


@lru_cache(maxsize=64)
def _threshold_index(key, dps: int) -> int:
    c = _constant(key, dps + 10)
    with mpmath.workdps(dps + 10):
        unit = mpmath.mpf(10) ** (-(dps + 8))
        prod = mpmath.mpf(1)
        primes = primes_array(1 << 16)
        n = 0
        while True:
            if n >= len(primes):
                primes = primes_array(2 * int(primes[-1]))
            p = int(primes[n])
            n += 1
            prod *= 1 - mpmath.mpf(1) / p
            err = 3 * n * unit * prod
            if prod + err < c:
                return n
            if prod - err < c:
                # too close to call with the running product; use the exact rational
                rational = _as_fraction(key)
                if rational is not None:
                    if mertens_product_exact(n) < gmpy2.mpq(rational.numerator, rational.denominator):
                        return n
                    continue
                exact = rational_to_mpf(mertens_product_exact(n), 2 * dps + 20)
                with mpmath.workdps(2 * dps + 20):
                    cc = _constant(key, 2 * dps + 20)
                    if exact.upper < cc:
                        return n
                    if exact.lower <= cc:
                        raise ArithmeticError(f"c_{n} and {key} agree to {2 * dps} digits")


def nc_threshold(c: ConstantLike, dps: int = DEFAULT_DPS) -> Threshold:
    """Smallest n with c_n = prod_{j<=n}(1 - 1/p_j) < c, and the primorial P_n.

    Every q divisible by P_n has phi(q)/q <= c_n < c.
    """
    value = _constant(c, dps + 10)
    if value <= 0:
        raise ValueError("c must be positive")
    key = c if isinstance(c, (str, int, Fraction)) else mpmath.nstr(value, dps + 10)
    n = _threshold_index(key, dps)
    from .arith import mertens_product

    return Threshold(n, primorial(n), mertens_product(n, dps), bool(value >= mpmath.mpf(1) / 2))


def in_nc(q: int, threshold: Threshold) -> bool:
    return q % threshold.primorial == 0


def nicolas_check(q: int, dps: int = DEFAULT_DPS) -> bool:
    """Whether phi(q) < q / (e^gamma log log q)."""
    if q < 3:
        raise ValueError("log log q must be positive: need q >= 3")
    phi = euler_phi(q)
    cur = dps
    for _ in range(5):
        with mpmath.workdps(cur + 10):
            rhs = mpmath.mpf(q) / (mpmath.exp(euler_gamma(cur + 10)) * mpmath.log(mpmath.log(q)))
            diff = rhs - phi
            if abs(diff) > abs(rhs) * mpmath.mpf(10) ** (-cur):
                return bool(diff > 0)
        cur *= 2
    raise ArithmeticError(f"cannot decide the inequality for q = {q}")


@dataclass
class BordignonRow:
    constant: str
    value: float
    parity: int
    needs_squarefree: bool
    applicable: bool
    threshold_n: int
    c_n: float
    divisible: bool
    phi_over_q: float
    new_bound_wins: bool


def bordignon_table(q: int, dps: int = DEFAULT_DPS) -> list[BordignonRow]:
    """The four leading constants next to phi(q)/q and the P_n | q conditions."""
    if q < 5:
        raise ValueError(f"table requires q >= 5, got {q}")
    fac = factorize(q)
    sqf = is_squarefree(fac)
    ratio = Fraction(euler_phi(fac), q)
    rows = []
    for name, parity, needs_sqf in BORDIGNON_CASES:
        th = nc_threshold(name, dps)
        cval = _constant(name, dps)
        rows.append(
            BordignonRow(
                constant=name,
                value=float(cval),
                parity=parity,
                needs_squarefree=needs_sqf,
                applicable=sqf or not needs_sqf,
                threshold_n=th.n,
                c_n=float(th.c_n.value),
                divisible=in_nc(q, th),
                phi_over_q=float(ratio),
                new_bound_wins=bool(_constant(ratio, dps) < cval),
            )
        )
    return rows


def threshold_table(dps: int = DEFAULT_DPS) -> list[dict]:
    """Threshold indices and c_n values for the four named constants."""
    out = []
    for name, parity, sqf in BORDIGNON_CASES:
        th = nc_threshold(name, dps)
        out.append(
            {
                "constant": name,
                "value": mpmath.nstr(_constant(name, dps), 12),
                "n": th.n,
                "p_n": nth_prime(th.n),
                "c_n": mpmath.nstr(th.c_n.value, 12),
                "primorial_bits": th.primorial.bit_length(),
            }
        )
    return out
