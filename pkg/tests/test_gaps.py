import dataclasses
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfgaps.arith import is_prime, kronecker
from qfgaps.gaps import (
    GapCertificate,
    NoIntervalFound,
    build_modulus,
    certify_gap,
    constants_table,
    default_delta,
    find_r,
    gap_report,
    residue_system,
    solve_y,
    theorem_bound,
    verify_certificate,
)
from qfgaps.qform import DiscriminantSet, Witness, is_represented

FAMILIES = [(-3,), (-4,), (-7,), (-8,), (-3, -4), (-4, -20), (-4, -8)]


@pytest.mark.parametrize("members,r", [((-4,), 3), ((-3,), 2), ((-4, -8), 7), ((-4, -20), 11), ((-7,), 3)])
def test_find_r(members, r):
    ds = DiscriminantSet(members)
    assert find_r(ds) == r
    for D in members:
        assert kronecker(D, r) == -1


def test_residue_system_sets_grow():
    rs = residue_system(20, 11)
    assert rs.ell == (1, 3, 7, 9, 11, 13, 17, 19)
    for a, b in zip(rs.t_sets, rs.t_sets[1:]):
        assert a <= b
    for j, lj in enumerate(rs.ell):
        assert all(any(lk * x % 20 == 11 for lk in rs.ell[: j + 1]) for x in rs.t_sets[j])
    with pytest.raises(ValueError):
        residue_system(20, 5)


def test_worked_modulus_and_certificate():
    ds = DiscriminantSet.of(-4)
    L, fac = build_modulus(ds, 2)
    assert L == 11
    assert list(fac) == [(3, 3), (7, 2), (11, 2)]
    cert = certify_gap(ds, 2)
    assert cert.y == cert.interval_start == 120063
    assert cert.modulus_value == 160083
    assert cert.witnesses == {1: {-4: Witness(7, 1)}, 2: {-4: Witness(11, 1)}}
    assert verify_certificate(cert)


@pytest.mark.parametrize("members", FAMILIES)
def test_certificates_verify_and_are_gaps(members):
    ds = DiscriminantSet(members)
    for k in range(1, 9):
        cert = certify_gap(ds, k)
        assert verify_certificate(cert).ok
        assert (ds.d * cert.y - cert.r) % cert.modulus_value == 0
        if cert.interval_start < 10**7:
            for j in range(1, k + 1):
                assert not any(is_represented(cert.interval_start + j, D) for D in members)


@pytest.mark.parametrize("members", FAMILIES)
def test_json_round_trip(members):
    cert = certify_gap(DiscriminantSet(members), 5)
    text = cert.to_json()
    again = GapCertificate.from_json(text)
    assert again == cert
    assert again.to_json() == text


def test_json_rejects_other_schema():
    d = certify_gap(DiscriminantSet.of(-4), 1).to_dict()
    d["schema"] = "something/2"
    with pytest.raises(ValueError):
        GapCertificate.from_dict(d)


def test_modulus_is_prime_and_coprime_to_d():
    for members in FAMILIES:
        ds = DiscriminantSet(members)
        for k in (1, 4, 9):
            L, fac = build_modulus(ds, k)
            assert all(is_prime(p) and ds.d % p and p <= L for p, _ in fac)


def test_solve_y():
    assert solve_y(4, 3, 160083) == 120063
    assert (7 * solve_y(7, 3, 1000003) - 3) % 1000003 == 0
    with pytest.raises(ValueError):
        solve_y(4, 3, 10)


def test_delta_variant():
    ds = DiscriminantSet.of(-4)
    assert default_delta(4) == Fraction(1, 6)
    cert = certify_gap(ds, 2, "delta", Fraction(1, 6))
    assert cert.variant == "delta"
    assert cert.interval_start == cert.y + cert.interval_index * cert.modulus_value
    assert verify_certificate(cert)
    assert GapCertificate.from_json(cert.to_json()) == cert
    with pytest.raises(ValueError):
        build_modulus(ds, 2, "delta", Fraction(1, 2))


def test_delta_variant_may_find_nothing():
    # a tiny delta leaves no interval index to try
    with pytest.raises(NoIntervalFound):
        certify_gap(DiscriminantSet.of(-4), 1, "delta", Fraction(1, 100))


def _mutate(cert: GapCertificate, which: str) -> GapCertificate:
    j = 1
    D = cert.ds[0]
    w = cert.witnesses[j][D]
    if which == "gamma":
        new = Witness(w.p, w.gamma + 1)
    elif which == "p":
        new = Witness(w.p + 1 if not is_prime(w.p + 1) else w.p * w.p, w.gamma)
    else:
        return dataclasses.replace(cert, y=cert.y + 1)
    ws = {jj: dict(v) for jj, v in cert.witnesses.items()}
    ws[j][D] = new
    return dataclasses.replace(cert, witnesses=ws)


@pytest.mark.parametrize("which", ["gamma", "p", "y"])
def test_single_mutations_fail(which):
    cert = certify_gap(DiscriminantSet.of(-4, -20), 4)
    bad = verify_certificate(_mutate(cert, which))
    assert not bad.ok and bad.diagnostics


def test_structural_mutations_fail():
    cert = certify_gap(DiscriminantSet.of(-3), 3)
    assert not verify_certificate(dataclasses.replace(cert, k=4))
    assert not verify_certificate(dataclasses.replace(cert, r=1))
    assert not verify_certificate(dataclasses.replace(cert, d=6))
    ws = dict(cert.witnesses)
    del ws[2]
    assert not verify_certificate(dataclasses.replace(cert, witnesses=ws))
    assert not verify_certificate(dataclasses.replace(cert, variant="other"))


def test_theorem_bound():
    assert theorem_bound(4) == pytest.approx(0.21767454549288476)
    with pytest.raises(ValueError):
        theorem_bound(2)


def test_gap_report_small():
    rep = gap_report(DiscriminantSet.of(-4), 10**5)
    assert rep.max_pair == (2, 4)
    assert rep.max_ratio == pytest.approx(2 / math.log(2))
    recs = list(rep.records())
    assert recs[0] == (1, 2, 1, None)
    running = list(rep.running_records())
    assert running[0][:2] == (2, 4)
    assert all(a[3] < b[3] for a, b in zip(running, running[1:]))


@given(st.integers(min_value=10, max_value=20000))
@settings(max_examples=25, deadline=None)
def test_gap_report_gaps_positive(X):
    rep = gap_report(DiscriminantSet.of(-3, -4), X)
    assert all(g > 0 for _, _, g, _ in rep.records())
    assert rep.values[-1] <= X


def test_constants_table():
    table = constants_table(DiscriminantSet.of(-4, -20))
    rows = {r.label: r for r in table.rows}
    assert rows["D=-4"].richards == 0.25
    assert not rows["D=-4"].compared and rows["D=-4"].flags
    assert rows["D=-20"].compared
    assert rows["D=-20"].new_bound > rows["D=-20"].dekkm1
    assert rows["d"].m == 20
    assert table.comparisons_hold
