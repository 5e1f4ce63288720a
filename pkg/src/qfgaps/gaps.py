"""Explicit long-gap certificates and finite-range gap statistics.

Construction (Richards' argument with the residue-class refinement):

* ``r`` is a common non-residue, ``(D/r) = -1`` for every D, ``1 <= r <= d``;
* ``L = r + d k``; every prime ``p <= L`` coprime to d gets exponent
  ``beta_p + 1`` where ``p^beta_p <= L < p^(beta_p + 1)``;
* primes up to ``L / ell_t`` are always kept, larger ones only when their
  residue lies in the matching set ``T_i``;
* ``y`` solves ``d y = r (mod P)``, and each of ``y+1, ..., y+k`` then has a
  prime with ``(D/p) = -1`` to an odd exact power.

A certificate stores those primes explicitly, so :func:`verify_certificate`
needs nothing but the witness lemma and never rebuilds the modulus.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from .arith import Factorization, euler_phi, is_prime, kronecker, primes_up_to
from .qform import DiscriminantSet, Witness, check_witness, exclusion_witness, sieve_values

SCHEMA = "qfgaps.gap-certificate/1"


class ConstructionError(RuntimeError):
    """The plain construction failed to witness an offset (indicates a bug)."""


class NoIntervalFound(RuntimeError):
    """No fully witnessed interval among n = 1..floor(delta L)."""


def find_r(ds: DiscriminantSet) -> int:
    """Smallest 1 <= r <= d with gcd(r, D) = 1 and (D/r) = -1 for all D."""
    d = ds.d
    for r in range(1, d + 1):
        if all(math.gcd(r, D) == 1 and kronecker(D, r) == -1 for D in ds):
            return r
    raise ConstructionError(f"no common non-residue in [1, {d}] for {ds.members}")


@dataclass(frozen=True)
class ResidueSystem:
    d: int
    r: int
    ell: tuple[int, ...]
    t_sets: tuple[frozenset, ...]

    @property
    def t(self) -> int:
        return len(self.ell)


def residue_system(d: int, r: int) -> ResidueSystem:
    if d < 3:
        raise ValueError(f"d must be >= 3, got {d}")
    if math.gcd(r, d) != 1:
        raise ValueError(f"gcd({r}, {d}) != 1")
    ell = tuple(x for x in range(1, d) if math.gcd(x, d) == 1)
    sets, cur = [], set()
    for lj in ell:
        cur.add(r * pow(lj, -1, d) % d)
        sets.append(frozenset(cur))
    return ResidueSystem(d, r, ell, tuple(sets))


def _beta(p: int, L: int) -> int:
    b, q = 0, p
    while q <= L:
        b += 1
        q *= p
    return b


def default_delta(d: int) -> Fraction:
    return Fraction(1, 2 * (d - 1))


def build_modulus(ds: DiscriminantSet, k: int, variant: str = "plain", delta=None) -> tuple[int, Factorization]:
    """(L, modulus) for the plain product P or the thinned product P_delta."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    d = ds.d
    rs = residue_system(d, find_r(ds))
    L = rs.r + d * k
    if variant == "delta":
        delta = default_delta(d) if delta is None else Fraction(delta)
        if not 0 < delta < Fraction(1, rs.ell[-1]):
            raise ValueError(f"delta must lie in (0, 1/{rs.ell[-1]}), got {delta}")
    elif variant != "plain":
        raise ValueError(f"unknown variant {variant!r}")
    ell, t = rs.ell, rs.t
    entries = []
    for p in primes_up_to(L):
        if d % p == 0:
            continue
        if p * ell[-1] > L:
            i = max(j for j in range(t) if p * ell[j] <= L)  # L/ell_{i+1} < p <= L/ell_i
            if p % d not in rs.t_sets[i]:
                continue
        e = _beta(p, L) + 1
        if variant == "delta" and p > delta * L:
            e = 1
        entries.append((p, e))
    return L, Factorization(entries)


def solve_y(d: int, r: int, modulus: int) -> int:
    """Unique y in [1, modulus] with d*y = r (mod modulus)."""
    if math.gcd(d, modulus) != 1:
        raise ValueError(f"{d} is not invertible modulo the modulus")
    y = r * pow(d, -1, modulus) % modulus
    return y if y else modulus


@dataclass
class GapCertificate:
    ds: tuple[int, ...]
    d: int
    r: int
    k: int
    variant: str
    modulus: Factorization
    y: int
    interval_index: int
    interval_start: int
    witnesses: dict[int, dict[int, Witness]]
    delta: Optional[Fraction] = None

    @property
    def modulus_value(self) -> int:
        return self.modulus.value()

    @property
    def log_modulus_per_k(self) -> float:
        return sum(e * math.log(p) for p, e in self.modulus) / self.k

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "ds": list(self.ds),
            "d": self.d,
            "r": self.r,
            "k": self.k,
            "variant": self.variant,
            "delta": None if self.delta is None else f"{self.delta.numerator}/{self.delta.denominator}",
            "modulus": [[p, e] for p, e in self.modulus],
            "y": str(self.y),
            "interval_index": self.interval_index,
            "interval_start": str(self.interval_start),
            "witnesses": {
                str(j): {str(D): [w.p, w.gamma] for D, w in ws.items()} for j, ws in self.witnesses.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "GapCertificate":
        if obj.get("schema") != SCHEMA:
            raise ValueError(f"unsupported certificate schema {obj.get('schema')!r}")
        delta = obj.get("delta")
        return cls(
            ds=tuple(int(D) for D in obj["ds"]),
            d=int(obj["d"]),
            r=int(obj["r"]),
            k=int(obj["k"]),
            variant=str(obj["variant"]),
            modulus=Factorization((int(p), int(e)) for p, e in obj["modulus"]),
            y=int(obj["y"]),
            interval_index=int(obj["interval_index"]),
            interval_start=int(obj["interval_start"]),
            witnesses={
                int(j): {int(D): Witness(int(w[0]), int(w[1])) for D, w in ws.items()}
                for j, ws in obj["witnesses"].items()
            },
            delta=None if delta is None else Fraction(delta),
        )

    @classmethod
    def from_json(cls, text: str) -> "GapCertificate":
        return cls.from_dict(json.loads(text))


def _witness_interval(start: int, k: int, ds: DiscriminantSet, bound: int):
    out = {}
    for j in range(1, k + 1):
        w = exclusion_witness(start + j, ds, bound)
        if w is None:
            return None, j
        out[j] = w
    return out, None


def certify_gap(
    ds: DiscriminantSet,
    k: int,
    variant: str = "plain",
    delta=None,
    witness_prime_bound: Optional[int] = None,
) -> GapCertificate:
    """Build a certificate that ``start+1, ..., start+k`` are all non-represented."""
    d = ds.d
    r = find_r(ds)
    L, fac = build_modulus(ds, k, variant, delta)
    modulus = fac.value()
    bound = max(L, witness_prime_bound or 0)
    y = solve_y(d, r, modulus)
    if variant == "plain":
        witnesses, bad = _witness_interval(y, k, ds, bound)
        if witnesses is None:
            raise ConstructionError(f"offset {bad} of the plain interval has no witness below {bound}")
        return GapCertificate(tuple(ds.members), d, r, k, "plain", fac, y, 0, y, witnesses)
    delta = default_delta(d) if delta is None else Fraction(delta)
    n_max = math.floor(delta * L)
    for n in range(1, n_max + 1):
        start = y + n * modulus
        witnesses, _ = _witness_interval(start, k, ds, bound)
        if witnesses is not None:
            return GapCertificate(tuple(ds.members), d, r, k, "delta", fac, y, n, start, witnesses, delta)
    raise NoIntervalFound(
        f"no witnessed interval for n in 1..{n_max} (k={k}, delta={delta}); "
        "the interval lemma needs L large: increase k or decrease delta"
    )


@dataclass
class Verification:
    ok: bool
    diagnostics: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def verify_certificate(cert: GapCertificate) -> Verification:
    """Check every claim in ``cert`` from scratch; failures become diagnostics."""
    diag: list[str] = []
    try:
        ds = DiscriminantSet(tuple(cert.ds))
    except ValueError as exc:
        return Verification(False, [f"invalid discriminant set: {exc}"])
    d = ds.d
    if cert.d != d:
        diag.append(f"d = {cert.d} but lcm of |D| is {d}")
    if cert.k < 1:
        diag.append(f"k = {cert.k} < 1")
    if not 1 <= cert.r:
        diag.append(f"r = {cert.r} is not positive")
    for D in ds:
        if math.gcd(cert.r, D) != 1 or kronecker(D, cert.r) != -1:
            diag.append(f"r = {cert.r} is not a non-residue for D = {D}")
    for p, _ in cert.modulus:
        if not is_prime(p):
            diag.append(f"modulus factor {p} is not prime")
    M = cert.modulus_value
    if math.gcd(d, M) != 1:
        diag.append("d and the modulus are not coprime")
    if not 1 <= cert.y <= M:
        diag.append("y is outside [1, modulus]")
    if (d * cert.y - cert.r) % M:
        diag.append("d*y != r (mod modulus)")
    if cert.variant == "plain":
        if cert.interval_index != 0 or cert.interval_start != cert.y:
            diag.append("plain certificate must start at y with index 0")
    elif cert.variant == "delta":
        delta = cert.delta
        if delta is None or not 0 < delta < Fraction(1, d - 1):
            diag.append(f"delta {delta} outside (0, 1/{d - 1})")
        else:
            L = cert.r + d * cert.k
            if not 1 <= cert.interval_index <= math.floor(delta * L):
                diag.append(f"interval index {cert.interval_index} outside 1..floor(delta L)")
        if cert.interval_start != cert.y + cert.interval_index * M:
            diag.append("interval_start != y + n * modulus")
    else:
        diag.append(f"unknown variant {cert.variant!r}")
    if set(cert.witnesses) != set(range(1, cert.k + 1)):
        diag.append("witness offsets are not exactly 1..k")
    for j in sorted(cert.witnesses):
        ws = cert.witnesses[j]
        if set(ws) != set(ds.members):
            diag.append(f"offset {j}: witnesses do not cover every discriminant")
        m = cert.interval_start + j
        if m < 1:
            diag.append(f"offset {j}: value {m} is not positive")
            continue
        for D, w in ws.items():
            problem = check_witness(m, D, w)
            if problem:
                diag.append(f"offset {j}, D = {D}: {problem}")
    return Verification(not diag, diag)


# ---------------------------------------------------------------------------
# statistics and constants


def theorem_bound(d: int) -> float:
    """1 / (log d + loglog d + logloglog d + 4); defined for d >= 3."""
    if d < 3:
        raise ValueError("logloglog d is undefined for d < 3")
    ln = math.log(d)
    lln = math.log(ln)
    return 1.0 / (ln + lln + math.log(lln) + 4.0)


@dataclass
class GapReport:
    ds: DiscriminantSet
    X: int
    values: np.ndarray
    max_ratio: float
    max_pair: tuple[int, int]
    theorem_bound: float

    @property
    def richards_bounds(self) -> dict[int, float]:
        return {D: 1.0 / abs(D) for D in self.ds}

    def records(self):
        """(s_n, s_{n+1}, gap, gap / log s_n); the ratio is None at s_n = 1."""
        s = self.values
        for a, b in zip(s[:-1].tolist(), s[1:].tolist()):
            yield a, b, b - a, (b - a) / math.log(a) if a > 1 else None

    def running_records(self):
        """Pairs where gap / log s_n reaches a new maximum."""
        best = -1.0
        for rec in self.records():
            if rec[3] is not None and rec[3] > best:
                best = rec[3]
                yield rec


def gap_report(ds: DiscriminantSet, X: int) -> GapReport:
    values = sieve_values(ds, X)
    max_ratio, pair = float("nan"), (0, 0)
    if len(values) >= 2:
        s = values[:-1]
        gaps = np.diff(values)
        mask = s > 1
        ratios = np.full(len(s), -np.inf)
        ratios[mask] = gaps[mask] / np.log(s[mask].astype(np.float64))
        i = int(np.argmax(ratios))
        if np.isfinite(ratios[i]):
            max_ratio, pair = float(ratios[i]), (int(values[i]), int(values[i + 1]))
    return GapReport(ds, X, values, max_ratio, pair, theorem_bound(ds.d))


@dataclass
class ConstantsRow:
    label: str
    m: int
    richards: float
    dekkm_claimed: float
    dekkm_claimed_alt: str
    dekkm1: float
    dekkm2: str
    new_bound: Optional[float]
    compared: bool
    new_beats_dekkm1: Optional[bool]
    flags: list[str]


def _constants_row(label: str, m: int) -> ConstantsRow:
    phi = euler_phi(m)
    flags = []
    with mpmath.workdps(30):
        dekkm_claimed = float((m - 1) / (2 * m * (mpmath.log(phi) + 1)))
        dekkm1 = float(phi / (2 * m * (mpmath.log(phi) + 1)))
    new = theorem_bound(m) if m >= 3 else None
    compared = m >= 5
    if not compared:
        flags.append("|D| < 5: logloglog term negative or undefined; excluded from the comparison")
    beats = new > dekkm1 if (compared and new is not None) else None
    return ConstantsRow(
        label,
        m,
        1.0 / m,
        dekkm_claimed,
        f"{m}/(2*{phi}*(log {m} + O((loglog {m})^2)))  [unquantified]",
        dekkm1,
        f"{m}/(2*{m - 1}*(log {m} + O((loglog {m})^3)))  [log|D| + unquantified]",
        new,
        compared,
        beats,
        flags,
    )


@dataclass
class ConstantsTable:
    rows: list[ConstantsRow]

    @property
    def comparisons_hold(self) -> bool:
        return all(row.new_beats_dekkm1 for row in self.rows if row.compared)


def constants_table(ds: DiscriminantSet) -> ConstantsTable:
    rows = [_constants_row(f"D={D}", abs(D)) for D in ds]
    rows.append(_constants_row("d", ds.d))
    return ConstantsTable(rows)
