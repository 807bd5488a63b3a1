from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgk.errors import NonPositiveValueError
from pgk.kummer import (
    KummerInstance,
    constructive_q,
    constructive_scan,
    kummer_margin,
    scan_sufficiency,
    scan_violations,
    telescoped_bound,
)
from pgk.numerics import NumInterval, PrecisionPolicy, TriVerdict

HARMONIC = KummerInstance.parse("1/n", "1", "n")
GEOMETRIC = KummerInstance.parse("1/2^n", "1", "1")


def margin_oracle(a, b, q, n):
    """q_n a_n / a_{n+1} - q_{n+1} - b_{n+1} with plain Fractions."""
    return q(n) * a(n) / a(n + 1) - q(n + 1) - b(n + 1)


def test_margin_examples():
    m = kummer_margin(HARMONIC, 3)
    assert m.margin.is_exact and m.margin.lo == -1
    assert m.verdict is TriVerdict.STRICTLY_LESS
    m = kummer_margin(GEOMETRIC, 5)
    assert m.margin.lo == m.margin.hi == 0
    assert m.verdict is TriVerdict.GREATER_OR_EQUAL
    m = kummer_margin(KummerInstance.parse("1", "1", "1"), 1)
    assert m.margin.lo == -1 and m.verdict is TriVerdict.STRICTLY_LESS


@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 400),
    st.sampled_from(
        [
            ("1/n^2", "n", "n^2", lambda k: Fraction(1, k * k), lambda k: Fraction(k), lambda k: Fraction(k * k)),
            ("1/2^n", "n+1", "3", lambda k: Fraction(1, 2**k), lambda k: Fraction(k + 1), lambda k: Fraction(3)),
            ("1/(n+1)", "1/n", "n/2", lambda k: Fraction(1, k + 1), lambda k: Fraction(1, k), lambda k: Fraction(k, 2)),
        ]
    ),
)
def test_margin_matches_fraction_oracle(n, case):
    a, b, q, fa, fb, fq = case
    m = kummer_margin(KummerInstance.parse(a, b, q), n)
    exact = margin_oracle(fa, fb, fq, n)
    assert m.margin.is_exact and m.margin.lo == exact
    assert (m.verdict is TriVerdict.STRICTLY_LESS) == (exact < 0)


def test_irrational_margin_escalates_and_encloses(primes):
    inst = KummerInstance.parse("1/sqrt(p)", "1/p", "sqrt(n)")
    m = kummer_margin(inst, 10, primes=primes)
    assert m.verdict.decided
    assert m.margin.width < Fraction(1, 10**12)


def test_nonpositive_sequence_is_reported():
    with pytest.raises(NonPositiveValueError) as info:
        kummer_margin(KummerInstance.parse("1/n", "n-5", "1"), 3)
    assert info.value.which == "b" and info.value.n == 4
    with pytest.raises(NonPositiveValueError) as info:
        kummer_margin(KummerInstance.parse("1/n", "1", "n-2"), 2)
    assert info.value.which == "q" and info.value.n == 2


def test_margin_below_start_is_rejected():
    with pytest.raises(ValueError):
        kummer_margin(KummerInstance.parse("1/n", "1", "n", start=5), 3)


def test_sufficiency_examples():
    r = scan_sufficiency(GEOMETRIC, (1, 1000))
    assert r.all_hold and r.first_failure is None
    r = scan_sufficiency(HARMONIC, (1, 1000))
    assert not r.all_hold and r.first_failure == 1
    r = scan_sufficiency(HARMONIC, (10, 9))
    assert r.all_hold and r.reason == "empty range"


def test_unresolved_indices_block_all_hold():
    # tiny but exact positive margin 2^-300: decided at once
    inst = KummerInstance.parse("1/2^n", "1 - 2^(0-300)", "1")
    assert scan_sufficiency(inst, (1, 3), PrecisionPolicy((53,), cap=53)).all_hold
    # margin exactly 0 but written with irrational ratios: never decided
    inst = KummerInstance.parse("1/sqrt(2)^(2*n)", "1", "1")
    r = scan_sufficiency(inst, (1, 3), PrecisionPolicy((53, 128), cap=128))
    assert not r.all_hold and r.reason == "unresolved" and r.indeterminate == [1, 2, 3]
    assert r.first_failure is None
    assert scan_violations(inst, (1, 3)).violations == []


def test_violation_examples():
    r = scan_violations(HARMONIC, (1, 10**4))
    assert r.violations == list(range(1, 10**4 + 1))
    assert all(d.count == d.size for d in r.per_decade)
    assert [d.size for d in r.per_decade] == [9, 90, 900, 9000, 1]
    assert scan_violations(GEOMETRIC, (1, 10**4)).violations == []


def test_threaded_violation_scan_is_identical():
    inst = KummerInstance.parse("1/n^2", "n", "n^2")
    a = scan_violations(inst, (1, 3000), threads=1, chunk_size=256)
    b = scan_violations(inst, (1, 3000), threads=4, chunk_size=256)
    assert a.violations == b.violations and a.per_decade == b.per_decade


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["1/n", "1/2^n", "1/n^2", "1/(n+3)"]), st.sampled_from(["1", "n", "1/n"]), st.sampled_from(["1", "n", "n^2", "2^n"]), st.integers(1, 50))
def test_sufficiency_and_violations_partition_decided_indices(a, b, q, lo):
    inst = KummerInstance.parse(a, b, q)
    s = scan_sufficiency(inst, (lo, lo + 60))
    v = scan_violations(inst, (lo, lo + 60))
    holds = {m.n for m in s.rows if m.holds}
    assert holds.isdisjoint(v.violations)
    assert holds | set(v.violations) | set(v.indeterminate) == set(range(lo, lo + 61))


def test_constructive_q_examples():
    for n in (1, 2, 7, 50):
        q = constructive_q("1/2^n", "1", 1, n)
        assert q.is_exact and q.lo == 1
    with pytest.raises(NonPositiveValueError):
        constructive_q("1/2^n", "1", "0.5", 2)


def test_constructive_identity_at_seven():
    rows = constructive_scan("1/2^n", "1", 1, (7, 7))
    assert rows[0].residual.is_exact and rows[0].residual.lo == 0
    # the margin of the constructed q equals b_{n+1} exactly
    inst = KummerInstance.parse("1/2^n", "1", "1")
    assert kummer_margin(inst, 7).margin.lo == 0


def test_constructive_with_an_enclosed_sum():
    # sum 1/(n(n+1)) = 1 telescopes; supply S as a tiny enclosure instead of exactly
    eps = Fraction(1, 2**400)
    S = NumInterval.outward(1 - eps, 1 + eps, 1024)
    rows = constructive_scan("1/(n*(n+1))", "1", S, (1, 40))
    for r in rows:
        assert r.q.contains(r.n)  # (1 - n/(n+1)) * n(n+1) = n
        assert r.residual.contains(0) and r.residual.width < Fraction(1, 2**300)


def test_constructive_start_index():
    rows = constructive_scan("1/2^n", "1", Fraction(1, 2), (2, 5), start=2)
    assert all(r.q.lo == 1 and r.residual.lo == 0 for r in rows)


@pytest.mark.parametrize("N,k", [(1, 0), (3, 7), (20, 50), (50, 50)])
def test_telescoped_bound_geometric(N, k):
    t = telescoped_bound(GEOMETRIC, N, k)
    assert t.lhs.is_exact and t.rhs.is_exact and t.holds


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(0, 30), st.sampled_from(["1/3^n", "1/n^3", "1/(n^2*2^n)"]))
def test_sufficiency_implies_telescoped_bound(N, k, a):
    inst = KummerInstance.parse(a, "1", "1")
    if scan_sufficiency(inst, (N, N + k + 1)).all_hold:
        assert telescoped_bound(inst, N, k).holds
